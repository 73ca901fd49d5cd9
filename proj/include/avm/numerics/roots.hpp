#pragma once

#include "avm/error.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace avm::numerics {

/// How the central-difference step h_i scales with the coordinate x_i.
enum class FdScaling {
    MaxOne,  ///< h_i = fd_jacobian_step * max(1, |x_i|)
    OnePlus, ///< h_i = fd_jacobian_step * (1 + |x_i|)
};

struct RootSpec {
    double residual_tol = 1e-10;
    double step_tol = 1e-14;
    int max_iter = 100;
    double fd_jacobian_step = 1e-6;
    FdScaling fd_scaling = FdScaling::MaxOne;
    /// Backtracking halvings allowed per Newton step.
    int max_halvings = 30;
    /// 0 solves each Newton step with full-pivot LU. A positive value switches to the
    /// minimum-norm SVD step, dropping singular values below svd_rank_rel_tol * sigma_max.
    double svd_rank_rel_tol = 0.0;

    void validate() const;
};

using ScalarMap = std::function<double(double)>;
using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Bracketed root of f on [a, b]; requires f(a) f(b) < 0 (an endpoint that is
/// already a root is returned as is).
double find_root_1d(const ScalarMap& f, double a, double b, const RootSpec& spec);

struct NewtonResult {
    Eigen::VectorXd root;  ///< last iterate when not converged
    /// Central-difference Jacobian evaluated at `root` (empty when not converged).
    Eigen::MatrixXd jacobian;
    double residual = 0.0;  ///< sup-norm of F(root)
    int iterations = 0;
    bool converged = false;
    /// Numerical rank used by the last Newton step (n for LU steps).
    int rank = 0;
    /// Singular values of the last Newton Jacobian (SVD mode only).
    Eigen::VectorXd singular_values;
    ErrorKind failure = ErrorKind::MaxIterations;
    std::string message;
};

/// Damped Newton iteration with a central-difference Jacobian and halving line search.
/// Never throws on non-convergence: the result records the last iterate, its
/// residual and the reason. Throws NonFinite if F is not finite at x0.
NewtonResult newton_iterate(const VectorMap& F, const Eigen::VectorXd& x0, const RootSpec& spec);

/// newton_iterate that throws Error(result.failure) unless it converged.
NewtonResult find_root_nd(const VectorMap& F, const Eigen::VectorXd& x0, const RootSpec& spec);

/// Central differences with the step scaling of `scaling`.
Eigen::MatrixXd fd_jacobian(const VectorMap& F, const Eigen::VectorXd& x, double rel_step,
                            FdScaling scaling = FdScaling::MaxOne);

} // namespace avm::numerics
