#pragma once

#include "avm/melnikov.hpp"
#include "avm/numerics/ode.hpp"
#include "avm/numerics/roots.hpp"
#include "avm/slowflow.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace avm::persist {

using slowflow::SlowFlowParams;
using slowflow::SlowFlowState;

/// Stroboscopic map of the forced slow flow over one forcing period.
struct ShootingProblem {
    SlowFlowParams params;
    SlowFlowState guess;
    double period = 0.0;
    /// Radius of the predicted unperturbed orbit; 0 means guess.rho.
    double prediction_rho = 0.0;

    double predicted_rho() const { return prediction_rho > 0.0 ? prediction_rho : guess.rho; }
    /// Throws InvalidArgument unless the guess lies in theta in (0, pi/2), Delta in (0, pi), rho > 0.
    void validate() const;

    /// Seeds at periodic_family(root.rho, 0) with (mu, beta1) from the root and period 2 pi / P.
    static ShootingProblem from_root(const melnikov::MelnikovRoot& root, double eps, int k, double P);
};

struct ShootingSpec {
    numerics::IntegratorSpec integrator = numerics::IntegratorSpec::adaptive(1e-12);
    numerics::RootSpec newton{.residual_tol = 1e-10,
                              .step_tol = 1e-15,
                              .max_iter = 40,
                              .fd_jacobian_step = 1e-7,
                              .fd_scaling = numerics::FdScaling::OnePlus,
                              .max_halvings = 30,
                              .svd_rank_rel_tol = 1e-6};
    /// Samples per period for the distance to the unperturbed orbit.
    int distance_samples = 401;
    /// When direct shooting fails, retry from eps / 2^m (m = 1..levels) and walk back up.
    int homotopy_levels = 6;
};

struct PersistenceResult {
    double eps = 0.0;
    // Predicted root.
    double beta1 = 0.0;
    double rho0 = 0.0;
    double mu1 = 0.0;
    double mu2 = 1.0;
    double det_con1 = 0.0;
    // Shooting outcome.
    bool converged = false;
    SlowFlowState fixed;
    double residual = 0.0;  ///< sup-norm of poincare_map(x) - x
    double distance = 0.0;  ///< sup over one period of |state - family prediction|
    std::array<std::complex<double>, 3> floquet{};
    std::array<double, 3> floquet_moduli{};  ///< descending
    int iterations = 0;
    int rank = 0;
    Eigen::VectorXd singular_values;
    int homotopy_steps = 0;
    std::string message;
};

SlowFlowState poincare_map(const SlowFlowState& x, const SlowFlowParams& p,
                           const numerics::IntegratorSpec& spec = numerics::IntegratorSpec::adaptive(1e-12));

/// Central-difference Jacobian of the map, step h_i = rel_step (1 + |x_i|).
Eigen::Matrix3d monodromy(const SlowFlowState& x, const SlowFlowParams& p,
                          const numerics::IntegratorSpec& spec = numerics::IntegratorSpec::adaptive(1e-12),
                          double rel_step = 1e-7);

/// Monodromy from the variational equations along the orbit through x (analytic Jacobian).
/// Better conditioned than the difference quotient near the eigenvalue-1 Jordan block at eps = 0.
Eigen::Matrix3d monodromy_variational(const SlowFlowState& x, const SlowFlowParams& p,
                                      const numerics::IntegratorSpec& spec = numerics::IntegratorSpec::adaptive(1e-12));

/// Eigenvalues of a monodromy matrix, sorted by descending modulus.
std::array<std::complex<double>, 3> floquet_multipliers(const Eigen::Matrix3d& m);

/// Sup-norm distance between the eps-flow from x and periodic_family(rho0, .) over one period.
double distance_to_prediction(const SlowFlowState& x, double rho0, const SlowFlowParams& p,
                              const ShootingSpec& spec);

/// Newton on poincare_map(x) - x in (rho, theta, Delta) with forcing parameters held fixed.
/// Non-convergence is reported through `converged` and `message`.
PersistenceResult shoot_periodic(const ShootingProblem& problem, const ShootingSpec& spec = {});

/// Second parameterization: rho pinned at the guess, unknowns (theta, Delta, beta1).
/// On success `beta1` holds the adjusted phase.
PersistenceResult shoot_periodic_adjust_beta(const ShootingProblem& problem, const ShootingSpec& spec = {});

/// The eps = 0 row: the seed is the fixed point, all multipliers equal 1.
PersistenceResult unperturbed_row(const ShootingProblem& problem);

/// Per-eps shooting with warm starts from the previous converged fixed point.
/// eps = 0 rows are filled analytically. Rows that fail are kept with converged = false.
std::vector<PersistenceResult> epsilon_sweep(const melnikov::MelnikovRoot& root,
                                             const std::vector<double>& eps_list, int k, double P,
                                             const ShootingSpec& spec = {});

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    int points = 0;
};

/// Least-squares slope of log(distance) against log(eps) over converged rows with eps > 0.
/// Throws InvalidArgument with fewer than two usable rows.
SlopeFit distance_slope(const std::vector<PersistenceResult>& rows);

} // namespace avm::persist
