#include "avm/persist.hpp"

#include "avm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace avm::persist {

using std::numbers::pi;

void ShootingProblem::validate() const {
    params.validate();
    if (!(period > 0.0)) throw Error(ErrorKind::InvalidArgument, "shooting period must be positive");
    if (!(guess.rho > 0.0) || !(guess.theta > 0.0 && guess.theta < 0.5 * pi) ||
        !(guess.delta > 0.0 && guess.delta < pi)) {
        std::ostringstream os;
        os << "shooting guess (" << guess.rho << ", " << guess.theta << ", " << guess.delta
           << ") outside rho > 0, theta in (0, pi/2), Delta in (0, pi)";
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
}

ShootingProblem ShootingProblem::from_root(const melnikov::MelnikovRoot& root, double eps, int k, double P) {
    ShootingProblem prob;
    prob.params.P = P;
    prob.params.k = k;
    prob.params.eps = eps;
    prob.params.mu1 = root.mu1;
    prob.params.mu2 = root.mu2;
    prob.params.beta1 = root.beta1;
    const auto start = slowflow::periodic_family(root.rho, 0.0, prob.params);
    prob.guess = {root.rho, start.theta, start.delta};
    prob.period = 2.0 * pi / P;
    return prob;
}

SlowFlowState poincare_map(const SlowFlowState& x, const SlowFlowParams& p, const numerics::IntegratorSpec& spec) {
    const auto y0 = x.as_array();
    const auto y1 = numerics::propagate(slowflow::slow_flow_field(p), y0, 0.0, 2.0 * pi / p.P, spec);
    return SlowFlowState::from(y1);
}

Eigen::Matrix3d monodromy(const SlowFlowState& x, const SlowFlowParams& p, const numerics::IntegratorSpec& spec,
                          double rel_step) {
    const Eigen::Vector3d x0(x.rho, x.theta, x.delta);
    auto phi = [&](const Eigen::VectorXd& v) {
        const auto s = poincare_map({v[0], v[1], v[2]}, p, spec);
        return Eigen::VectorXd(Eigen::Vector3d(s.rho, s.theta, s.delta));
    };
    return numerics::fd_jacobian(phi, x0, rel_step, numerics::FdScaling::OnePlus);
}

Eigen::Matrix3d monodromy_variational(const SlowFlowState& x, const SlowFlowParams& p,
                                      const numerics::IntegratorSpec& spec) {
    const numerics::VectorField f = [&p](double t, std::span<const double> y, std::span<double> d) {
        const SlowFlowState s = SlowFlowState::from(y);
        const SlowFlowState v = slowflow::slow_flow_rhs(s, t, p);
        d[0] = v.rho;
        d[1] = v.theta;
        d[2] = v.delta;
        const auto J = slowflow::slow_flow_jacobian(s, t, p);
        // Y' = J Y with Y stored row-major after the state.
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int m = 0; m < 3; ++m) acc += J[i][m] * y[3 + 3 * m + j];
                d[3 + 3 * i + j] = acc;
            }
    };
    std::array<double, 12> y0{x.rho, x.theta, x.delta, 1, 0, 0, 0, 1, 0, 0, 0, 1};
    const auto y1 = numerics::propagate(f, y0, 0.0, 2.0 * pi / p.P, spec);
    Eigen::Matrix3d M;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) M(i, j) = y1[3 + 3 * i + j];
    return M;
}

std::array<std::complex<double>, 3> floquet_multipliers(const Eigen::Matrix3d& m) {
    Eigen::EigenSolver<Eigen::Matrix3d> es(m, false);
    std::array<std::complex<double>, 3> ev{es.eigenvalues()[0], es.eigenvalues()[1], es.eigenvalues()[2]};
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return std::abs(a) > std::abs(b); });
    return ev;
}

double distance_to_prediction(const SlowFlowState& x, double rho0, const SlowFlowParams& p,
                              const ShootingSpec& spec) {
    const double T = 2.0 * pi / p.P;
    const auto y0 = x.as_array();
    const auto traj = numerics::integrate(slowflow::slow_flow_field(p), y0, 0.0, T, spec.integrator);
    const int n = std::max(2, spec.distance_samples);
    double dist = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = T * i / (n - 1);
        const auto y = traj.at(t);
        const auto q = slowflow::periodic_family(rho0, t, p);
        dist = std::max({dist, std::abs(y[0] - rho0), std::abs(y[1] - q.theta), std::abs(y[2] - q.delta)});
    }
    return dist;
}

namespace {

void fill_floquet(PersistenceResult& r, const Eigen::Matrix3d& m) {
    r.floquet = floquet_multipliers(m);
    for (int i = 0; i < 3; ++i) r.floquet_moduli[i] = std::abs(r.floquet[i]);
}

PersistenceResult blank_result(const ShootingProblem& prob) {
    PersistenceResult r;
    r.eps = prob.params.eps;
    r.beta1 = prob.params.beta1;
    r.rho0 = prob.predicted_rho();
    r.mu1 = prob.params.mu1;
    r.mu2 = prob.params.mu2;
    r.fixed = prob.guess;
    return r;
}

numerics::NewtonResult newton_state(const SlowFlowParams& p, const Eigen::Vector3d& x0, const ShootingSpec& spec) {
    auto G = [&](const Eigen::VectorXd& v) {
        const auto s = poincare_map({v[0], v[1], v[2]}, p, spec.integrator);
        return Eigen::VectorXd(Eigen::Vector3d(s.rho - v[0], s.theta - v[1], s.delta - v[2]));
    };
    return numerics::newton_iterate(G, x0, spec.newton);
}

// Solves at p.eps from x0, falling back to a geometric ramp in eps when the direct attempt fails.
numerics::NewtonResult solve_with_homotopy(const SlowFlowParams& p, const Eigen::Vector3d& x0,
                                           const ShootingSpec& spec, int& levels_used) {
    levels_used = 0;
    numerics::NewtonResult direct = newton_state(p, x0, spec);
    if (direct.converged) return direct;

    for (int m = 1; m <= spec.homotopy_levels; ++m) {
        SlowFlowParams q = p;
        q.eps = p.eps / std::ldexp(1.0, m);
        numerics::NewtonResult step = newton_state(q, x0, spec);
        if (!step.converged) continue;
        for (int j = m - 1; j >= 0 && step.converged; --j) {
            q.eps = p.eps / std::ldexp(1.0, j);
            step = newton_state(q, step.root, spec);
        }
        if (step.converged) {
            levels_used = m;
            return step;
        }
    }
    direct.message += "; eps ramp did not recover";
    return direct;
}

} // namespace

PersistenceResult unperturbed_row(const ShootingProblem& problem) {
    PersistenceResult r = blank_result(problem);
    r.eps = 0.0;
    r.converged = true;
    r.floquet = {1.0, 1.0, 1.0};
    r.floquet_moduli = {1.0, 1.0, 1.0};
    r.rank = 0;
    r.message = "unperturbed family point";
    return r;
}

PersistenceResult shoot_periodic(const ShootingProblem& problem, const ShootingSpec& spec) {
    problem.validate();
    if (problem.params.eps == 0.0) return unperturbed_row(problem);

    PersistenceResult r = blank_result(problem);
    const Eigen::Vector3d x0(problem.guess.rho, problem.guess.theta, problem.guess.delta);
    numerics::NewtonResult nr;
    try {
        nr = solve_with_homotopy(problem.params, x0, spec, r.homotopy_steps);
    } catch (const Error& e) {
        r.message = e.what();
        return r;
    }
    r.fixed = {nr.root[0], nr.root[1], nr.root[2]};
    r.residual = nr.residual;
    r.iterations = nr.iterations;
    r.rank = nr.rank;
    r.singular_values = nr.singular_values;
    r.converged = nr.converged;
    r.message = nr.converged ? "converged" : nr.message;
    if (!nr.converged) return r;

    try {
        fill_floquet(r, nr.jacobian + Eigen::Matrix3d::Identity());
        r.distance = distance_to_prediction(r.fixed, problem.predicted_rho(), problem.params, spec);
    } catch (const Error& e) {
        r.converged = false;
        r.message = e.what();
    }
    return r;
}

PersistenceResult shoot_periodic_adjust_beta(const ShootingProblem& problem, const ShootingSpec& spec) {
    problem.validate();
    if (problem.params.eps == 0.0) return unperturbed_row(problem);

    PersistenceResult r = blank_result(problem);
    const double rho = problem.guess.rho;
    auto G = [&](const Eigen::VectorXd& v) {
        SlowFlowParams q = problem.params;
        q.beta1 = v[2];
        const auto s = poincare_map({rho, v[0], v[1]}, q, spec.integrator);
        return Eigen::VectorXd(Eigen::Vector3d(s.rho - rho, s.theta - v[0], s.delta - v[1]));
    };
    const Eigen::Vector3d x0(problem.guess.theta, problem.guess.delta, problem.params.beta1);
    numerics::NewtonResult nr;
    try {
        nr = numerics::newton_iterate(G, x0, spec.newton);
    } catch (const Error& e) {
        r.message = e.what();
        return r;
    }
    r.fixed = {rho, nr.root[0], nr.root[1]};
    r.beta1 = nr.root[2];
    r.residual = nr.residual;
    r.iterations = nr.iterations;
    r.rank = nr.rank;
    r.singular_values = nr.singular_values;
    r.converged = nr.converged;
    r.message = nr.converged ? "converged" : nr.message;
    if (!nr.converged) return r;

    SlowFlowParams q = problem.params;
    q.beta1 = r.beta1;
    try {
        fill_floquet(r, monodromy(r.fixed, q, spec.integrator, spec.newton.fd_jacobian_step));
        r.distance = distance_to_prediction(r.fixed, problem.predicted_rho(), q, spec);
    } catch (const Error& e) {
        r.converged = false;
        r.message = e.what();
    }
    return r;
}

std::vector<PersistenceResult> epsilon_sweep(const melnikov::MelnikovRoot& root, const std::vector<double>& eps_list,
                                             int k, double P, const ShootingSpec& spec) {
    std::vector<PersistenceResult> rows;
    rows.reserve(eps_list.size());
    const ShootingProblem base = ShootingProblem::from_root(root, 0.0, k, P);
    SlowFlowState warm = base.guess;
    for (double eps : eps_list) {
        ShootingProblem prob = base;
        prob.params.eps = eps;
        prob.guess = warm;
        prob.prediction_rho = root.rho;
        PersistenceResult row;
        if (eps == 0.0) {
            row = unperturbed_row(base);
        } else {
            try {
                prob.validate();
                row = shoot_periodic(prob, spec);
            } catch (const Error& e) {
                row = blank_result(prob);
                row.message = e.what();
            }
            if (row.converged) warm = row.fixed;
        }
        row.det_con1 = root.det_con1;
        rows.push_back(row);
    }
    return rows;
}

SlopeFit distance_slope(const std::vector<PersistenceResult>& rows) {
    std::vector<double> xs, ys;
    for (const auto& r : rows)
        if (r.converged && r.eps > 0.0 && r.distance > 0.0) {
            xs.push_back(std::log(r.eps));
            ys.push_back(std::log(r.distance));
        }
    if (xs.size() < 2) throw Error(ErrorKind::InvalidArgument, "slope fit needs two converged rows with eps > 0");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw Error(ErrorKind::InvalidArgument, "slope fit needs distinct eps values");
    SlopeFit fit;
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.points = static_cast<int>(xs.size());
    return fit;
}

} // namespace avm::persist
