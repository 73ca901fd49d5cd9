#pragma once

#include "avm/numerics/ode.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace avm::lattice {

/// Transverse harmonic load on the p-th mode shape.
struct ForcingEntry {
    int p = 1;
    double amplitude = 0.0;
    /// Drive frequency; defaults to the linear frequency omega_p.
    std::optional<double> drive_frequency;
};

/// Normalized lattice of N particles between fixed walls.
struct LatticeConfig {
    int N = 1;
    double c = 0.0;  ///< normalized damping xi / sqrt(k m)
    std::vector<ForcingEntry> forcing;

    void validate() const;
    double drive_frequency(const ForcingEntry& f) const;
};

/// Normalized axial/transverse displacements and their tau-derivatives.
/// Flat layout used with the integrator: [s_1..s_N, w_1..w_N, s'_1..s'_N, w'_1..w'_N].
struct LatticeState {
    std::vector<double> s, w, ds, dw;

    static LatticeState zeros(int N);
    static LatticeState from_flat(std::span<const double> y);
    std::vector<double> flat() const;
    int size() const { return static_cast<int>(w.size()); }
};

/// omega_p = 2 sin(pi p / (2 (N + 1))).
double nnm_frequency(int p, int N);

/// phi_p = [sin(p pi i / (N + 1))]_{i=1..N}.
Eigen::VectorXd mode_shape(int p, int N);

/// Tridiagonal (2, -1) matrix of the fixed-end chain.
Eigen::MatrixXd stiffness_matrix(int N);

/// f_i(tau) = sum_p F_p cos(Omega_p tau) sin(p i pi / (N + 1)), i = 1..N.
void transverse_forcing(const LatticeConfig& cfg, double tau, std::span<double> out);

/// Exact normalized lattice in first-order form. `y` and `dydt` use the
/// LatticeState flat layout. Throws DegenerateSpring if a spring has zero length.
void exact_lattice_rhs(std::span<const double> y, double tau, const LatticeConfig& cfg,
                       std::span<double> dydt);
LatticeState exact_lattice_rhs(const LatticeState& state, double tau, const LatticeConfig& cfg);

/// Kinetic plus spring energy of the exact lattice, sum of (s'^2 + w'^2)/2 + sum of delta^2/2.
double exact_lattice_energy(std::span<const double> y, int N);

/// Unforced reduced transverse system, componentwise form:
///   w''_i = -(1 / (2 (N + 1))) sum_q (w_{q+1} - w_q)^2 (2 w_i - w_{i+1} - w_{i-1}).
void reduced_rhs(std::span<const double> w, std::span<double> out);
std::vector<double> reduced_rhs(std::span<const double> w);

/// Same field through the matrix form -(1 / (2 (N + 1))) <Mw, w> Mw.
Eigen::VectorXd reduced_rhs_matrix(const Eigen::VectorXd& w);

/// <Mw, w>^2 / (8 (N + 1)) + |w'|^2 / 2.
double reduced_energy(std::span<const double> w, std::span<const double> dw);

enum class ModalConvention {
    C,  ///< w = sum C_p phi_p
    A,  ///< A_p = (omega_p / 2) C_p
};

struct ModalState {
    std::vector<double> amp;
    std::vector<double> vel;
    ModalConvention convention = ModalConvention::C;
};

/// Modal equations of the forced reduced system in either convention.
/// Returns (amp', vel') = (vel, acceleration).
ModalState modal_rhs(const ModalState& state, double tau, std::span<const ForcingEntry> forcing,
                     int N);

/// Coordinates change between conventions, per mode.
ModalState convert(const ModalState& state, ModalConvention to, int N);

/// Projection of w onto the mode shapes (C-coordinates).
std::vector<double> modal_projection(std::span<const double> w, int N);
std::vector<double> modal_synthesis(std::span<const double> C, int N);

struct TwoModeParams {
    double omega_k = 1.0;
    double omega_p = 1.0;
    double eps = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
};

/// State (A_k, A_k', A_p, A_p').
using TwoModeState = std::array<double, 4>;

TwoModeState two_mode_rhs(const TwoModeState& y, double tau, const TwoModeParams& p);

/// Conserved for eps = 0:
///   A_k'^2 / (2 omega_k^2) + A_p'^2 / (2 omega_p^2) + (A_k^2 + A_p^2)^2 / 4.
double two_mode_energy(const TwoModeState& y, const TwoModeParams& p);

/// Period of the reduced NNM C'' + omega_p^4 C^3 / 4 = 0 with modal amplitude C0.
double nnm_period(int p, int N, double modal_amplitude);

struct ComparisonOptions {
    int mode = 1;
    int samples_per_period = 101;
    numerics::IntegratorSpec integrator = numerics::IntegratorSpec::adaptive(1e-10);
};

struct ComparisonReport {
    double mismatch = 0.0;       ///< sup over particles and samples of |w_exact - w_reduced|
    double nnm_period = 0.0;
    double horizon = 0.0;
    std::size_t samples = 0;
    double exact_energy_drift = 0.0;
};

/// Integrates the exact lattice and the reduced model from w(0) = a phi_p / max|phi_p|
/// (zero velocities, zero axial data) and reports the transverse mismatch.
/// `amplitude_scale` is the largest initial transverse displacement.
ComparisonReport compare_exact_vs_reduced(const LatticeConfig& cfg, double amplitude_scale,
                                          double horizon, const ComparisonOptions& opts = {});

numerics::VectorField exact_lattice_field(const LatticeConfig& cfg);
/// Forced reduced system in first-order form [w, w'].
numerics::VectorField reduced_field(const LatticeConfig& cfg);
/// Modal system in first-order form [amp, vel].
numerics::VectorField modal_field(std::vector<ForcingEntry> forcing, int N, ModalConvention conv);

} // namespace avm::lattice
