#include "avm/melnikov.hpp"

#include "avm/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace avm::melnikov {

using std::numbers::pi;

double GField::operator()(double /*rho*/, double theta, double delta, double tau,
                          const SlowFlowParams& p) const {
    const double drive = std::cos(p.P * tau);
    const double phase1 = p.k * p.P * tau + p.beta1;
    const double phase2 = phase1 + delta;
    switch (i * 10 + j) {
    case 11: return -std::cos(theta) * drive * std::cos(phase1);
    case 12: return std::sin(theta) * drive * std::cos(phase2);
    case 21: return -drive / std::sin(theta) * std::sin(phase1);
    case 22: return drive / std::cos(theta) * std::sin(phase2);
    case 31: return -std::sin(theta) * drive * std::cos(phase1);
    case 32: return -std::cos(theta) * drive * std::cos(phase2);
    default: break;
    }
    throw Error(ErrorKind::InvalidArgument, "g field index out of range");
}

std::string GField::name() const { return "g" + std::to_string(i) + std::to_string(j); }

std::array<GField, 6> g_fields() {
    return {GField{1, 1}, GField{1, 2}, GField{2, 1}, GField{2, 2}, GField{3, 1}, GField{3, 2}};
}

double dI_dtheta(double theta, double delta) { return 2.0 * std::cos(2.0 * theta) * std::sin(delta); }
double dI_ddelta(double theta, double delta) { return std::sin(2.0 * theta) * std::cos(delta); }

namespace {

SlowFlowParams with_beta(const SlowFlowParams& p, double beta1) {
    SlowFlowParams q = p;
    q.beta1 = beta1;
    q.eps = 0.0;
    return q;
}

// Period integral split at tau = pi / P, where Delta switches sides of pi/2.
template <class Integrand>
double period_integral(Integrand&& f, double P, const numerics::QuadratureSpec& quad) {
    const double half = pi / P;
    return numerics::quad(f, 0.0, half, quad) + numerics::quad(f, half, 2.0 * half, quad);
}

void require_family(double rho, const SlowFlowParams& p) {
    if (!(rho > slowflow::family_threshold(p.k, p.P))) {
        std::ostringstream os;
        os << "rho=" << rho << " does not carry a 2pi/P orbit (threshold "
           << slowflow::family_threshold(p.k, p.P) << ")";
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
}

} // namespace

MelnikovBar melnikov_bar(double beta1, double rho, const SlowFlowParams& p,
                         const numerics::QuadratureSpec& quad) {
    require_family(rho, p);
    const SlowFlowParams q = with_beta(p, beta1);
    const double P = q.P, kP = q.k * q.P;

    auto orbit = [&](double tau) { return slowflow::periodic_family(rho, tau, q); };

    MelnikovBar m;
    m.m11 = period_integral(
        [&](double tau) {
            const auto [th, dl] = orbit(tau);
            const double a = kP * tau + beta1;
            return -(2.0 * std::cos(2.0 * th) * std::sin(dl) * std::cos(th) * std::cos(P * tau) * std::cos(a) +
                     2.0 * std::cos(th) * std::cos(dl) * std::cos(P * tau) * std::sin(a));
        },
        P, quad);
    m.m12 = period_integral(
        [&](double tau) {
            const auto [th, dl] = orbit(tau);
            const double a = kP * tau + dl + beta1;
            return 2.0 * std::cos(2.0 * th) * std::sin(dl) * std::sin(th) * std::cos(P * tau) * std::cos(a) +
                   2.0 * std::sin(th) * std::cos(dl) * std::cos(P * tau) * std::sin(a);
        },
        P, quad);
    m.m21 = period_integral(
        [&](double tau) {
            const auto [th, dl] = orbit(tau);
            return -std::sin(th) * std::cos(P * tau) * std::cos(kP * tau + beta1);
        },
        P, quad);
    m.m22 = period_integral(
        [&](double tau) {
            const auto [th, dl] = orbit(tau);
            return -std::cos(th) * std::cos(P * tau) * std::cos(kP * tau + dl + beta1);
        },
        P, quad);
    return m;
}

MelnikovBar melnikov_bar_from_fields(double beta1, double rho, const SlowFlowParams& p,
                                     const numerics::QuadratureSpec& quad) {
    require_family(rho, p);
    const SlowFlowParams q = with_beta(p, beta1);
    auto first_row = [&](int j) {
        const GField g1{1, j}, g2{2, j};
        return period_integral(
            [&](double tau) {
                const auto [th, dl] = slowflow::periodic_family(rho, tau, q);
                return dI_dtheta(th, dl) * g1(rho, th, dl, tau, q) +
                       dI_ddelta(th, dl) * g2(rho, th, dl, tau, q);
            },
            q.P, quad);
    };
    auto second_row = [&](int j) {
        const GField g3{3, j};
        return period_integral(
            [&](double tau) {
                const auto [th, dl] = slowflow::periodic_family(rho, tau, q);
                return g3(rho, th, dl, tau, q);
            },
            q.P, quad);
    };
    return {first_row(1), first_row(2), second_row(1), second_row(2)};
}

double melnikov_tilde(double beta1, double rho, const SlowFlowParams& p,
                      const numerics::QuadratureSpec& quad) {
    return melnikov_bar(beta1, rho, p, quad).tilde();
}

Eigen::Vector2d melnikov_full(double beta1, double rho, const SlowFlowParams& p,
                              const numerics::QuadratureSpec& quad) {
    const Eigen::Vector2d bar = melnikov_bar(beta1, rho, p, quad).combined(p.mu1, p.mu2);
    return {bar[0] / rho - slowflow::family_dK_drho(rho, p.k, p.P) * bar[1], bar[1]};
}

AsymptoticMelnikov asymptotic_melnikov(double beta1, int k, double P) {
    if (k < 1 || !(P > 0.0)) throw Error(ErrorKind::InvalidArgument, "need k >= 1 and P > 0");
    const double kd = k, k2 = kd * kd;
    const double den = (16.0 * k2 * k2 - 40.0 * k2 + 9.0) * P;
    const double cb = std::cos(beta1), sb = std::sin(beta1);
    AsymptoticMelnikov a;
    a.bar.m11 = 16.0 * kd * (4.0 * k2 - 5.0) * cb / den;
    a.bar.m12 = -8.0 * (4.0 * k2 + 3.0) * sb / den;
    a.bar.m21 = 4.0 * (4.0 * k2 + 3.0) * cb / den;
    a.bar.m22 = -8.0 * kd * (4.0 * k2 - 5.0) * sb / den;
    a.tilde = -16.0 * std::sin(2.0 * beta1) / ((4.0 * k2 - 9.0) * P * P);
    return a;
}

Eigen::Vector2d null_vector(const Eigen::Matrix2d& m, double* sigma_max, double* sigma_min) {
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullV);
    if (sigma_max) *sigma_max = svd.singularValues()[0];
    if (sigma_min) *sigma_min = svd.singularValues()[1];
    Eigen::Vector2d v = svd.matrixV().col(1).normalized();
    if (v[1] < 0.0 || (std::abs(v[1]) <= 1e-15 && v[0] < 0.0)) v = -v;
    if (std::abs(v[1]) <= 1e-15) v = {1.0, 0.0};
    return v;
}

MelnikovRoot characterize_root(double beta1, double rho, const SlowFlowParams& p,
                               const RootSearchSpec& spec) {
    MelnikovRoot r;
    r.beta1 = beta1;
    r.rho = rho;
    r.K = slowflow::family_K(rho, p.k, p.P);
    r.bar = melnikov_bar(beta1, rho, p, spec.quad);
    r.tilde_residual = std::abs(r.bar.tilde());
    const Eigen::Vector2d mu = null_vector(r.bar.matrix(), &r.sigma_max, &r.sigma_min);
    r.mu1 = mu[0];
    r.mu2 = mu[1];
    r.degenerate = r.sigma_max < spec.null_tol;
    r.null_residual = (r.bar.matrix() * mu).cwiseAbs().maxCoeff();

    const double hb = spec.grad_step_beta, hr = spec.grad_step_rho_rel * rho;
    const MelnikovBar bp = melnikov_bar(beta1 + hb, rho, p, spec.quad);
    const MelnikovBar bm = melnikov_bar(beta1 - hb, rho, p, spec.quad);
    const MelnikovBar rp = melnikov_bar(beta1, rho + hr, p, spec.quad);
    const MelnikovBar rm = melnikov_bar(beta1, rho - hr, p, spec.quad);
    const Eigen::Vector2d d_beta = (bp.combined(r.mu1, r.mu2) - bm.combined(r.mu1, r.mu2)) / (2.0 * hb);
    const Eigen::Vector2d d_rho = (rp.combined(r.mu1, r.mu2) - rm.combined(r.mu1, r.mu2)) / (2.0 * hr);
    Eigen::Matrix2d con1;
    con1.col(0) = d_beta;
    con1.col(1) = d_rho;
    r.det_con1 = con1.determinant();
    return r;
}

MelnikovRoot solve_root_system(double seed_beta1, double seed_rho, const SlowFlowParams& p,
                               const RootSearchSpec& spec) {
    require_family(seed_rho, p);
    auto f = [&](double beta) { return melnikov_tilde(beta, seed_rho, p, spec.quad); };
    double beta0 = seed_beta1;
    if (std::abs(f(seed_beta1)) > spec.root.residual_tol) {
        const double w = spec.bracket_half_width;
        beta0 = numerics::find_root_1d(f, seed_beta1 - w, seed_beta1 + w, spec.root);
    }
    return characterize_root(beta0, seed_rho, p, spec);
}

Branch continue_branch(double seed_beta1, const SlowFlowParams& p, const ContinuationSpec& cont,
                       const RootSearchSpec& spec) {
    if (!(cont.rho_factor > 0.0 && cont.rho_factor < 1.0))
        throw Error(ErrorKind::InvalidArgument, "continuation factor must lie in (0, 1)");
    const double stop = slowflow::family_threshold(p.k, p.P) * (1.0 + cont.threshold_margin);
    Branch branch;
    branch.seed_beta1 = seed_beta1;
    double beta = seed_beta1;
    double rho = cont.rho_start;
    for (int step = 0; step < cont.max_steps; ++step) {
        if (rho < stop) {
            branch.stop_reason = "reached family threshold";
            return branch;
        }
        try {
            const MelnikovRoot r = solve_root_system(beta, rho, p, spec);
            branch.roots.push_back(r);
            beta = r.beta1;
        } catch (const Error& e) {
            branch.stop_reason = e.what();
            return branch;
        }
        rho *= cont.rho_factor;
    }
    branch.stop_reason = "step limit";
    return branch;
}

std::array<double, 4> asymptotic_root_seeds() { return {0.0, 0.5 * pi, pi, 1.5 * pi}; }

BifurcationEval corollary_bifurcation(double gamma, double beta1, int k, double P) {
    const double kd = k, k2 = kd * kd;
    const double den = (16.0 * k2 * k2 - 40.0 * k2 + 9.0) * P;
    const double a = 16.0 * kd * (4.0 * k2 - 5.0) / den;
    const double b = 8.0 * (4.0 * k2 + 3.0) / den;
    const double c = 4.0 * (4.0 * k2 + 3.0) / den;
    const double d = 8.0 * kd * (4.0 * k2 - 5.0) / den;
    const double sg = std::sin(gamma), cg = std::cos(gamma);
    const double sb = std::sin(beta1), cb = std::cos(beta1);

    BifurcationEval e;
    e.residual = {a * sg * cb - b * cg * sb, c * sg * cb - d * cg * sb};
    e.jacobian << a * cg * cb + b * sg * sb, -a * sg * sb - b * cg * cb,
                  c * cg * cb + d * sg * sb, -c * sg * sb - d * cg * cb;
    e.det = e.jacobian.determinant();
    e.coefficient_det = b * c - a * d;
    return e;
}

std::vector<TableRow> melnikov_table(const std::vector<double>& betas, const std::vector<double>& rhos,
                                     const SlowFlowParams& p, const numerics::QuadratureSpec& quad,
                                     int threads) {
    std::vector<TableRow> rows(betas.size() * rhos.size());
    for (std::size_t i = 0; i < betas.size(); ++i)
        for (std::size_t j = 0; j < rhos.size(); ++j) {
            rows[i * rhos.size() + j].beta1 = betas[i];
            rows[i * rhos.size() + j].rho = rhos[j];
        }

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t idx = next++; idx < rows.size(); idx = next++) {
            auto& row = rows[idx];
            row.bar = melnikov_bar(row.beta1, row.rho, p, quad);
            row.tilde = row.bar.tilde();
        }
    };
    const int n = std::max(1, threads);
    if (n == 1) {
        work();
        return rows;
    }
    std::vector<std::jthread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int t = 0; t < n; ++t)
        pool.emplace_back([&] {
            try {
                work();
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = rows.size();
            }
        });
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return rows;
}

} // namespace avm::melnikov
