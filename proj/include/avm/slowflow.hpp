#pragma once

#include "avm/numerics/ode.hpp"

#include <array>

namespace avm::slowflow {

/// Parameters of the averaged two-mode flow with equal base frequencies
/// (omega_p = omega_k = P) and forcing frequency k P.
struct SlowFlowParams {
    double P = 1.0;
    int k = 1;
    double eps = 0.0;
    double mu1 = 0.0;
    double mu2 = 1.0;
    double beta1 = 0.0;

    /// Throws InvalidArgument unless P > 0, k >= 1 and |mu1^2 + mu2^2 - 1| <= 1e-12.
    void validate() const;
};

struct SlowFlowState {
    double rho = 0.0;
    double theta = 0.0;
    double delta = 0.0;

    std::array<double, 3> as_array() const { return {rho, theta, delta}; }
    static SlowFlowState from(std::span<const double> y) { return {y[0], y[1], y[2]}; }
};

struct AnglePair {
    double theta = 0.0;
    double delta = 0.0;
};

struct OrbitFamilyPoint {
    double rho = 0.0;
    double K = 0.0;
    double period = 0.0;
};

/// Inverse cotangent with range (0, pi), continuous through acot(0) = pi/2.
double acot(double x);

/// Closest distance of theta to {0, pi/2} below which the forced flow refuses to evaluate.
inline constexpr double kSingularGuard = 1e-12;

/// Full forced slow flow. Throws SingularDivisor if eps != 0 and sin(theta),
/// cos(theta) or rho is within kSingularGuard of zero.
SlowFlowState slow_flow_rhs(const SlowFlowState& s, double tau, const SlowFlowParams& p);

/// Jacobian of slow_flow_rhs with respect to (rho, theta, Delta), row-major.
/// Same singular-set guard as slow_flow_rhs.
std::array<std::array<double, 3>, 3> slow_flow_jacobian(const SlowFlowState& s, double tau,
                                                        const SlowFlowParams& p);

/// The unforced core in the rescaled time tau2 = rho^2 tau / (8 k^3 P^3).
AnglePair unperturbed_rhs_tau2(double theta, double delta);

/// d tau2 / d tau.
double tau2_rate(double rho, int k, double P);

/// I(theta, Delta) = sin 2theta sin Delta.
double first_integral(double theta, double delta);

/// Closed-form orbit through (theta0, pi/2) with sin 2theta0 = K, in tau2. Period pi/K.
AnglePair exact_solution_tau2(double K, double tau2);

/// Return time of the unperturbed angle flow (tau2 units) through (theta0, pi/2),
/// located as the first upward crossing of Delta = pi/2 on the dense trajectory.
double measured_period_tau2(double theta0,
                            const numerics::IntegratorSpec& spec = numerics::IntegratorSpec::adaptive(1e-12));

/// Radius above which the 2 pi / P periodic family exists: 2 k P^2 sqrt(k).
double family_threshold(int k, double P);

/// K(rho) = 4 k^3 P^4 / rho^2.
double family_K(double rho, int k, double P);

/// dK/drho = -8 k^3 P^4 / rho^3.
double family_dK_drho(double rho, int k, double P);

/// Radius with K(rho) = K.
double rho_for_K(double K, int k, double P);

OrbitFamilyPoint family_point(double rho, int k, double P);

/// The T = 2 pi / P periodic orbit of the unforced flow at radius rho.
/// Throws InvalidArgument if rho <= family_threshold.
AnglePair periodic_family(double rho, double tau, const SlowFlowParams& p);

/// Pointwise rho -> infinity limit of the family (tent in theta, step in Delta).
AnglePair periodic_family_limit(double tau, double P);

/// Sup-norm distance between the start point and the eps = 0 flow after one
/// period 2 pi / P, starting on the family.
double family_residual(double rho, const SlowFlowParams& p,
                       const numerics::IntegratorSpec& spec = numerics::IntegratorSpec{});

/// Adapters for the generic integrator: state (rho, theta, Delta) in tau, and
/// (theta, Delta) in tau2.
numerics::VectorField slow_flow_field(const SlowFlowParams& p);
numerics::VectorField unperturbed_field_tau2();

} // namespace avm::slowflow
