#include "avm/slowflow.hpp"

#include "avm/error.hpp"
#include "avm/numerics/roots.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace avm::slowflow {

using std::numbers::pi;

void SlowFlowParams::validate() const {
    if (!(P > 0.0)) throw Error(ErrorKind::InvalidArgument, "P must be positive");
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be a positive integer");
    if (std::abs(mu1 * mu1 + mu2 * mu2 - 1.0) > 1e-12)
        throw Error(ErrorKind::InvalidArgument, "forcing weights must satisfy mu1^2 + mu2^2 = 1");
    if (!std::isfinite(eps) || !std::isfinite(beta1))
        throw Error(ErrorKind::InvalidArgument, "eps and beta1 must be finite");
}

double acot(double x) {
    if (x > 0.0) return std::atan(1.0 / x);
    if (x < 0.0) return pi + std::atan(1.0 / x);
    return 0.5 * pi;
}

namespace {

double cube(double x) { return x * x * x; }

// cos^-1 with the argument clamped when rounding pushes it past +-1.
double safe_acos(double x) {
    if (x > 1.0) {
        if (x > 1.0 + 1e-12) throw Error(ErrorKind::InvalidArgument, "acos argument above 1");
        x = 1.0;
    } else if (x < -1.0) {
        if (x < -1.0 - 1e-12) throw Error(ErrorKind::InvalidArgument, "acos argument below -1");
        x = -1.0;
    }
    return std::acos(x);
}

} // namespace

SlowFlowState slow_flow_rhs(const SlowFlowState& s, double tau, const SlowFlowParams& p) {
    const double k3P3 = cube(static_cast<double>(p.k)) * cube(p.P);
    const double rho2 = s.rho * s.rho;
    const double sin_t = std::sin(s.theta), cos_t = std::cos(s.theta);

    SlowFlowState d;
    d.rho = 0.0;
    d.theta = -rho2 / (16.0 * k3P3) * std::sin(2.0 * s.theta) * std::sin(2.0 * s.delta);
    const double sin_d = std::sin(s.delta);
    d.delta = rho2 / (4.0 * k3P3) * std::cos(2.0 * s.theta) * sin_d * sin_d;
    if (p.eps == 0.0) return d;

    if (std::abs(sin_t) < kSingularGuard || std::abs(cos_t) < kSingularGuard ||
        std::abs(s.rho) < kSingularGuard) {
        std::ostringstream os;
        os << "forced slow flow evaluated on its singular set (rho=" << s.rho
           << ", theta=" << s.theta << ")";
        throw Error(ErrorKind::SingularDivisor, os.str());
    }
    const double drive = std::cos(p.P * tau);
    const double phase1 = p.k * p.P * tau + p.beta1;
    const double phase2 = phase1 + s.delta;
    const double em1 = p.eps * p.mu1, em2 = p.eps * p.mu2;

    d.rho = -em1 * sin_t * drive * std::cos(phase1) - em2 * cos_t * drive * std::cos(phase2);
    d.theta += -em1 * cos_t / s.rho * drive * std::cos(phase1) +
               em2 * sin_t / s.rho * drive * std::cos(phase2);
    d.delta += -em1 / (s.rho * sin_t) * drive * std::sin(phase1) +
               em2 / (s.rho * cos_t) * drive * std::sin(phase2);
    return d;
}

std::array<std::array<double, 3>, 3> slow_flow_jacobian(const SlowFlowState& s, double tau,
                                                        const SlowFlowParams& p) {
    const double c = s.rho * s.rho / (16.0 * cube(static_cast<double>(p.k)) * cube(p.P));
    const double s2t = std::sin(2.0 * s.theta), c2t = std::cos(2.0 * s.theta);
    const double s2d = std::sin(2.0 * s.delta), c2d = std::cos(2.0 * s.delta);
    const double sd = std::sin(s.delta);

    std::array<std::array<double, 3>, 3> J{};
    J[1][0] = -2.0 * c / s.rho * s2t * s2d;
    J[1][1] = -2.0 * c * c2t * s2d;
    J[1][2] = -2.0 * c * s2t * c2d;
    J[2][0] = 8.0 * c / s.rho * c2t * sd * sd;
    J[2][1] = -8.0 * c * s2t * sd * sd;
    J[2][2] = 4.0 * c * c2t * s2d;
    if (p.eps == 0.0) return J;

    const SlowFlowState full = slow_flow_rhs(s, tau, p);  // also applies the singular-set guard
    SlowFlowParams unforced = p;
    unforced.eps = 0.0;
    const SlowFlowState core = slow_flow_rhs(s, tau, unforced);
    const double sin_t = std::sin(s.theta), cos_t = std::cos(s.theta);
    const double drive = std::cos(p.P * tau);
    const double a1 = p.k * p.P * tau + p.beta1, a2 = a1 + s.delta;
    const double em1 = p.eps * p.mu1 * drive, em2 = p.eps * p.mu2 * drive;

    J[0][1] += -em1 * cos_t * std::cos(a1) + em2 * sin_t * std::cos(a2);
    J[0][2] += em2 * cos_t * std::sin(a2);
    J[1][0] += -(full.theta - core.theta) / s.rho;
    J[1][1] += (em1 * sin_t * std::cos(a1) + em2 * cos_t * std::cos(a2)) / s.rho;
    J[1][2] += -em2 * sin_t * std::sin(a2) / s.rho;
    J[2][0] += -(full.delta - core.delta) / s.rho;
    J[2][1] += (em1 * std::sin(a1) * cos_t / (sin_t * sin_t) + em2 * std::sin(a2) * sin_t / (cos_t * cos_t)) / s.rho;
    J[2][2] += em2 * std::cos(a2) / (cos_t * s.rho);
    return J;
}

AnglePair unperturbed_rhs_tau2(double theta, double delta) {
    const double sin_d = std::sin(delta);
    return {-0.5 * std::sin(2.0 * theta) * std::sin(2.0 * delta),
            2.0 * std::cos(2.0 * theta) * sin_d * sin_d};
}

double tau2_rate(double rho, int k, double P) {
    return rho * rho / (8.0 * cube(static_cast<double>(k)) * cube(P));
}

double first_integral(double theta, double delta) {
    return std::sin(2.0 * theta) * std::sin(delta);
}

AnglePair exact_solution_tau2(double K, double tau2) {
    if (!(K > 0.0 && K < 1.0))
        throw Error(ErrorKind::InvalidArgument, "first-integral level K must lie in (0, 1)");
    const double root = std::sqrt(1.0 - K * K);
    return {0.5 * safe_acos(root * std::cos(2.0 * K * tau2)),
            pi - acot(root / K * std::sin(2.0 * K * tau2))};
}

double measured_period_tau2(double theta0, const numerics::IntegratorSpec& spec) {
    if (!(theta0 > 0.0 && theta0 < 0.25 * pi))
        throw Error(ErrorKind::InvalidArgument, "theta0 must lie in (0, pi/4)");
    const std::array<double, 2> y0{theta0, 0.5 * pi};
    const numerics::RootSpec root{.residual_tol = 1e-12, .step_tol = 1e-15, .max_iter = 200};
    for (double horizon = 4.0; horizon < 1e9; horizon *= 2.0) {
        const auto traj = numerics::integrate(unperturbed_field_tau2(), y0, 0.0, horizon, spec);
        const auto& t = traj.times();
        // Skip the start point itself; Delta leaves pi/2 upward there.
        for (std::size_t i = 1; i + 1 < t.size(); ++i) {
            const double a = traj.node(i)[1] - 0.5 * pi;
            const double b = traj.node(i + 1)[1] - 0.5 * pi;
            if (a < 0.0 && b >= 0.0) {
                return numerics::find_root_1d([&](double s) { return traj.at(s)[1] - 0.5 * pi; }, t[i], t[i + 1],
                                              root);
            }
        }
    }
    throw Error(ErrorKind::MaxIterations, "no return to Delta = pi/2 found");
}

double family_threshold(int k, double P) {
    const double kd = static_cast<double>(k);
    return 2.0 * kd * P * P * std::sqrt(kd);
}

double family_K(double rho, int k, double P) {
    const double P2 = P * P;
    return 4.0 * cube(static_cast<double>(k)) * P2 * P2 / (rho * rho);
}

double family_dK_drho(double rho, int k, double P) {
    const double P2 = P * P;
    return -8.0 * cube(static_cast<double>(k)) * P2 * P2 / cube(rho);
}

double rho_for_K(double K, int k, double P) {
    if (!(K > 0.0)) throw Error(ErrorKind::InvalidArgument, "K must be positive");
    const double P2 = P * P;
    return std::sqrt(4.0 * cube(static_cast<double>(k)) * P2 * P2 / K);
}

OrbitFamilyPoint family_point(double rho, int k, double P) {
    return {rho, family_K(rho, k, P), 2.0 * pi / P};
}

AnglePair periodic_family(double rho, double tau, const SlowFlowParams& p) {
    if (!(rho > family_threshold(p.k, p.P))) {
        std::ostringstream os;
        os << "rho=" << rho << " is not above the family threshold " << family_threshold(p.k, p.P);
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
    const double kd = static_cast<double>(p.k);
    const double P2 = p.P * p.P;
    const double c = 4.0 * cube(kd) * P2 * P2;  // 4 k^3 P^4
    // sqrt(rho^4 - 16 k^6 P^8) computed as sqrt((rho^2 - c)(rho^2 + c)).
    const double root = std::sqrt((rho * rho - c) * (rho * rho + c));
    return {0.5 * safe_acos(root / (rho * rho) * std::cos(p.P * tau)),
            pi - acot(root / c * std::sin(p.P * tau))};
}

AnglePair periodic_family_limit(double tau, double P) {
    const double period = 2.0 * pi / P;
    double t = std::fmod(tau, period);
    if (t < 0.0) t += period;
    const double half = pi / P;
    AnglePair out;
    out.theta = t <= half ? 0.5 * P * t : pi - 0.5 * P * t;
    if (t == 0.0 || t == half)
        out.delta = 0.5 * pi;
    else
        out.delta = t < half ? pi : 0.0;
    return out;
}

numerics::VectorField slow_flow_field(const SlowFlowParams& p) {
    return [p](double t, std::span<const double> y, std::span<double> dy) {
        const SlowFlowState d = slow_flow_rhs(SlowFlowState::from(y), t, p);
        dy[0] = d.rho;
        dy[1] = d.theta;
        dy[2] = d.delta;
    };
}

numerics::VectorField unperturbed_field_tau2() {
    return [](double, std::span<const double> y, std::span<double> dy) {
        const AnglePair d = unperturbed_rhs_tau2(y[0], y[1]);
        dy[0] = d.theta;
        dy[1] = d.delta;
    };
}

double family_residual(double rho, const SlowFlowParams& p, const numerics::IntegratorSpec& spec) {
    SlowFlowParams unforced = p;
    unforced.eps = 0.0;
    const AnglePair start = periodic_family(rho, 0.0, unforced);
    const std::array<double, 3> y0{rho, start.theta, start.delta};
    const numerics::State y1 =
        numerics::propagate(slow_flow_field(unforced), y0, 0.0, 2.0 * pi / p.P, spec);
    double r = 0.0;
    for (std::size_t i = 0; i < 3; ++i) r = std::max(r, std::abs(y1[i] - y0[i]));
    return r;
}

} // namespace avm::slowflow
