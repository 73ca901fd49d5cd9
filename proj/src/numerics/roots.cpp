#include "avm/numerics/roots.hpp"

#include "avm/error.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>

namespace avm::numerics {

void RootSpec::validate() const {
    if (!(residual_tol > 0.0) || !(step_tol > 0.0) || !(fd_jacobian_step > 0.0))
        throw Error(ErrorKind::InvalidArgument, "root tolerances must be positive");
    if (max_iter < 1) throw Error(ErrorKind::InvalidArgument, "root max_iter must be >= 1");
    if (max_halvings < 0 || svd_rank_rel_tol < 0.0)
        throw Error(ErrorKind::InvalidArgument, "max_halvings and svd_rank_rel_tol must be non-negative");
}

double find_root_1d(const ScalarMap& f, double a, double b, const RootSpec& spec) {
    spec.validate();
    if (a > b) std::swap(a, b);
    const double fa = f(a), fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fb))
        throw Error(ErrorKind::NonFinite, "function not finite at bracket endpoints");
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) {
        std::ostringstream os;
        os << "no sign change on [" << a << ", " << b << "]: f(a)=" << fa << ", f(b)=" << fb;
        throw Error(ErrorKind::NoSignChange, os.str());
    }

    const double step_tol = spec.step_tol;
    auto tol = [step_tol](double lo, double hi) {
        return std::abs(hi - lo) <= step_tol * std::max(1.0, std::abs(lo));
    };
    std::uintmax_t iters = static_cast<std::uintmax_t>(spec.max_iter);
    const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
    const double flo = f(lo), fhi = f(hi);
    const double root = std::abs(flo) <= std::abs(fhi) ? lo : hi;
    const double froot = std::min(std::abs(flo), std::abs(fhi));
    if (froot > spec.residual_tol) {
        std::ostringstream os;
        os << "bracket [" << lo << ", " << hi << "] collapsed with |f| = " << froot
           << " above residual_tol after " << iters << " iterations";
        throw Error(ErrorKind::MaxIterations, os.str());
    }
    return root;
}

Eigen::MatrixXd fd_jacobian(const VectorMap& F, const Eigen::VectorXd& x, double rel_step,
                            FdScaling scaling) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd J;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = scaling == FdScaling::OnePlus ? 1.0 + std::abs(x[j])
                                                           : std::max(1.0, std::abs(x[j]));
        const double h = rel_step * scale;
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Eigen::VectorXd fp = F(xp), fm = F(xm);
        if (j == 0) J.resize(fp.size(), n);
        J.col(j) = (fp - fm) / (xp[j] - xm[j]);
    }
    return J;
}

namespace {

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string describe(const char* what, int it, double norm) {
    std::ostringstream os;
    os << what << " at iteration " << it << " (residual " << norm << ")";
    return os.str();
}

} // namespace

NewtonResult newton_iterate(const VectorMap& F, const Eigen::VectorXd& x0, const RootSpec& spec) {
    spec.validate();
    NewtonResult res;
    res.root = x0;
    Eigen::VectorXd fx = F(x0);
    if (!fx.allFinite()) throw Error(ErrorKind::NonFinite, "residual not finite at the initial guess");
    res.residual = sup_norm(fx);

    auto fail = [&](ErrorKind kind, std::string msg) {
        res.converged = false;
        res.failure = kind;
        res.message = std::move(msg);
        return res;
    };

    for (int it = 0;; ++it) {
        res.iterations = it;
        if (res.residual <= spec.residual_tol) {
            res.converged = true;
            res.jacobian = fd_jacobian(F, res.root, spec.fd_jacobian_step, spec.fd_scaling);
            return res;
        }
        if (it == spec.max_iter) {
            std::ostringstream os;
            os << "Newton did not converge in " << spec.max_iter << " iterations (residual "
               << res.residual << ")";
            return fail(ErrorKind::MaxIterations, os.str());
        }

        Eigen::MatrixXd J;
        try {
            J = fd_jacobian(F, res.root, spec.fd_jacobian_step, spec.fd_scaling);
        } catch (const Error& e) {
            return fail(e.kind(), describe(e.what(), it, res.residual));
        }
        if (!J.allFinite()) return fail(ErrorKind::NonFinite, describe("Jacobian not finite", it, res.residual));

        Eigen::VectorXd dx;
        if (spec.svd_rank_rel_tol > 0.0) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(spec.svd_rank_rel_tol);
            res.singular_values = svd.singularValues();
            res.rank = static_cast<int>(svd.rank());
            if (res.rank == 0) return fail(ErrorKind::SingularJacobian, describe("Jacobian has rank 0", it, res.residual));
            dx = svd.solve(-fx);
        } else {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
            lu.setThreshold(1e-13);
            if (!lu.isInvertible())
                return fail(ErrorKind::SingularJacobian,
                            describe("finite-difference Jacobian is singular", it, res.residual));
            res.rank = static_cast<int>(J.cols());
            dx = lu.solve(-fx);
        }
        if (!dx.allFinite()) return fail(ErrorKind::NonFinite, describe("Newton step not finite", it, res.residual));

        double lambda = 1.0;
        Eigen::VectorXd x_try, f_try;
        double n_try = res.residual;
        bool improved = false;
        for (int h = 0; h <= spec.max_halvings; ++h) {
            x_try = res.root + lambda * dx;
            try {
                f_try = F(x_try);
            } catch (const Error&) {
                f_try.resize(0);
            }
            if (f_try.size() && f_try.allFinite()) {
                n_try = sup_norm(f_try);
                if (n_try < res.residual) {
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!improved)
            return fail(ErrorKind::MaxIterations, describe("line search failed to reduce the residual", it, res.residual));

        const double step = lambda * sup_norm(dx);
        res.root = x_try;
        fx = f_try;
        res.residual = n_try;
        if (sup_norm(res.root) > 1e12) return fail(ErrorKind::Divergence, describe("Newton iterate diverged", it, res.residual));
        if (step <= spec.step_tol * (1.0 + sup_norm(res.root)) && res.residual > spec.residual_tol)
            return fail(ErrorKind::MaxIterations, describe("Newton stalled", it, res.residual));
    }
}

NewtonResult find_root_nd(const VectorMap& F, const Eigen::VectorXd& x0, const RootSpec& spec) {
    NewtonResult res = newton_iterate(F, x0, spec);
    if (!res.converged) throw Error(res.failure, res.message);
    return res;
}

} // namespace avm::numerics
