#pragma once

#include "avm/numerics/quadrature.hpp"
#include "avm/numerics/roots.hpp"
#include "avm/slowflow.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace avm::melnikov {

using slowflow::SlowFlowParams;

/// One of the six perturbation components g_ij (i = 1..3 equation, j = 1..2 forcing weight).
/// The forced slow flow reads
///   theta' = unforced + eps rho^-1 (mu1 g11 + mu2 g12),
///   Delta' = unforced + eps rho^-1 (mu1 g21 + mu2 g22),
///   rho'   =            eps        (mu1 g31 + mu2 g32).
struct GField {
    int i = 1;
    int j = 1;
    double operator()(double rho, double theta, double delta, double tau,
                      const SlowFlowParams& p) const;
    std::string name() const;
};

std::array<GField, 6> g_fields();

/// Partial derivatives of I = sin 2theta sin Delta.
double dI_dtheta(double theta, double delta);
double dI_ddelta(double theta, double delta);

/// Reduced Melnikov components at one (beta1, rho).
struct MelnikovBar {
    double m11 = 0.0, m12 = 0.0, m21 = 0.0, m22 = 0.0;

    double tilde() const { return m11 * m22 - m12 * m21; }
    Eigen::Matrix2d matrix() const {
        Eigen::Matrix2d m;
        m << m11, m12, m21, m22;
        return m;
    }
    /// (mu1 M_i1 + mu2 M_i2)_{i=1,2}
    Eigen::Vector2d combined(double mu1, double mu2) const { return matrix() * Eigen::Vector2d(mu1, mu2); }
};

/// Period integrals along the 2 pi / P family at radius rho, using the
/// expanded integrands of M11 and M12 (with 2 cos 2theta sin Delta and cos Delta factors).
/// `p.beta1` is ignored in favour of `beta1`. Throws InvalidArgument below the family threshold.
MelnikovBar melnikov_bar(double beta1, double rho, const SlowFlowParams& p,
                         const numerics::QuadratureSpec& quad = {});

/// Same components assembled from dI/dtheta g_1j + dI/dDelta g_2j and g_3j directly.
MelnikovBar melnikov_bar_from_fields(double beta1, double rho, const SlowFlowParams& p,
                                     const numerics::QuadratureSpec& quad = {});

double melnikov_tilde(double beta1, double rho, const SlowFlowParams& p,
                      const numerics::QuadratureSpec& quad = {});

/// Unreduced Melnikov vector (M1, M2) with weights (p.mu1, p.mu2):
///   M1 = rho^-1 Mbar_1 - dK/drho Mbar_2,  M2 = Mbar_2.
Eigen::Vector2d melnikov_full(double beta1, double rho, const SlowFlowParams& p,
                              const numerics::QuadratureSpec& quad = {});

/// rho -> infinity closed forms.
struct AsymptoticMelnikov {
    MelnikovBar bar;
    double tilde = 0.0;
};

AsymptoticMelnikov asymptotic_melnikov(double beta1, int k, double P);

struct MelnikovRoot {
    double beta1 = 0.0;
    double rho = 0.0;
    double K = 0.0;
    double mu1 = 0.0;
    double mu2 = 1.0;
    /// Determinant of the matrix with rows mu1 grad Mbar_i1 + mu2 grad Mbar_i2, gradients in (beta1, rho).
    double det_con1 = 0.0;
    double tilde_residual = 0.0;  ///< |Mtilde(beta1, rho)|
    double null_residual = 0.0;   ///< sup-norm of [Mbar] (mu1, mu2)^T
    double sigma_max = 0.0;       ///< singular values of [Mbar]
    double sigma_min = 0.0;
    bool degenerate = false;      ///< both singular values below the null-space tolerance
    MelnikovBar bar;
};

struct RootSearchSpec {
    numerics::QuadratureSpec quad;
    numerics::RootSpec root{.residual_tol = 1e-9, .step_tol = 1e-13, .max_iter = 100};
    double bracket_half_width = 0.3;  ///< beta1 search window around the seed
    double null_tol = 1e-10;          ///< singular-value floor for a degenerate null space
    double grad_step_beta = 1e-6;
    double grad_step_rho_rel = 1e-4;
};

/// Unit null vector of a 2x2 matrix, normalized with mu2 >= 0 (mu1 = +1 when mu2 = 0).
Eigen::Vector2d null_vector(const Eigen::Matrix2d& m, double* sigma_max = nullptr,
                            double* sigma_min = nullptr);

/// Holds rho fixed at seed_rho, solves Mtilde(beta1, rho) = 0 for beta1 near seed_beta1,
/// then computes the null vector and the nondegeneracy determinant.
MelnikovRoot solve_root_system(double seed_beta1, double seed_rho, const SlowFlowParams& p,
                               const RootSearchSpec& spec = {});

/// Evaluates the null vector and determinant data at a known (beta1, rho).
MelnikovRoot characterize_root(double beta1, double rho, const SlowFlowParams& p,
                               const RootSearchSpec& spec = {});

struct ContinuationSpec {
    double rho_start = 0.0;
    double rho_factor = 0.9;
    /// Stop once rho falls below threshold * (1 + margin).
    double threshold_margin = 0.05;
    int max_steps = 200;
};

struct Branch {
    double seed_beta1 = 0.0;
    std::vector<MelnikovRoot> roots;  ///< ordered by decreasing rho
    std::string stop_reason;
};

/// Tracks the root of Mtilde from (seed_beta1, rho_start) down toward the family threshold.
Branch continue_branch(double seed_beta1, const SlowFlowParams& p, const ContinuationSpec& cont,
                       const RootSearchSpec& spec = {});

/// beta1 in {0, pi/2, pi, 3pi/2}.
std::array<double, 4> asymptotic_root_seeds();

struct BifurcationEval {
    Eigen::Vector2d residual;
    Eigen::Matrix2d jacobian;  ///< columns d/dGamma, d/dbeta1
    double det = 0.0;          ///< det of the Jacobian
    double coefficient_det = 0.0;  ///< -32 / ((4k^2 - 9) P^2)
};

/// rho = infinity bifurcation system with mu1 = sin Gamma, mu2 = cos Gamma.
BifurcationEval corollary_bifurcation(double gamma, double beta1, int k, double P);

struct TableRow {
    double beta1 = 0.0;
    double rho = 0.0;
    MelnikovBar bar;
    double tilde = 0.0;
};

/// Fills Mbar on the tensor grid betas x rhos (row-major in beta1).
std::vector<TableRow> melnikov_table(const std::vector<double>& betas, const std::vector<double>& rhos,
                                     const SlowFlowParams& p, const numerics::QuadratureSpec& quad = {},
                                     int threads = 1);

} // namespace avm::melnikov
