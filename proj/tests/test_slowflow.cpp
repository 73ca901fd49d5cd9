#include "avm/error.hpp"
#include "avm/slowflow.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace avm;
using namespace avm::slowflow;
using std::numbers::pi;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an avm::Error");
    return ErrorKind::InvalidArgument;
}

SlowFlowParams params(int k, double P) {
    SlowFlowParams p;
    p.k = k;
    p.P = P;
    return p;
}

} // namespace

TEST_CASE("parameter validation") {
    SlowFlowParams p;
    CHECK_NOTHROW(p.validate());
    p.mu1 = 0.6;
    p.mu2 = 0.8;
    CHECK_NOTHROW(p.validate());
    p.mu2 = 0.7;
    CHECK(kind_of([&] { p.validate(); }) == ErrorKind::InvalidArgument);
    p = {};
    p.k = 0;
    CHECK(kind_of([&] { p.validate(); }) == ErrorKind::InvalidArgument);
    p = {};
    p.P = 0.0;
    CHECK(kind_of([&] { p.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("acot has range (0, pi) and is continuous at 0") {
    CHECK(acot(0.0) == doctest::Approx(0.5 * pi));
    CHECK(acot(1e-12) == doctest::Approx(0.5 * pi));
    CHECK(acot(-1e-12) == doctest::Approx(0.5 * pi));
    CHECK(acot(1.0) == doctest::Approx(0.25 * pi));
    CHECK(acot(-1.0) == doctest::Approx(0.75 * pi));
    CHECK(acot(1e300) > 0.0);
    CHECK(acot(-1e300) <= pi);
    CHECK(acot(-1e10) < pi);
}

TEST_CASE("unforced slow flow is the angle flow in rescaled time") {
    const auto p = params(2, 1.3);
    const SlowFlowState s{7.0, 0.4, 1.9};
    const auto d = slow_flow_rhs(s, 0.3, p);
    const auto u = unperturbed_rhs_tau2(s.theta, s.delta);
    const double rate = tau2_rate(s.rho, p.k, p.P);
    CHECK(d.rho == 0.0);
    CHECK(d.theta == doctest::Approx(rate * u.theta).epsilon(1e-14));
    CHECK(d.delta == doctest::Approx(rate * u.delta).epsilon(1e-14));
}

TEST_CASE("forced slow flow guards its singular set") {
    auto p = params(1, 1.0);
    p.eps = 1e-3;
    CHECK(kind_of([&] { slow_flow_rhs({5.0, 0.0, 1.0}, 0.0, p); }) == ErrorKind::SingularDivisor);
    CHECK(kind_of([&] { slow_flow_rhs({5.0, 0.5 * pi, 1.0}, 0.0, p); }) == ErrorKind::SingularDivisor);
    p.eps = 0.0;
    CHECK_NOTHROW(slow_flow_rhs({5.0, 0.0, 1.0}, 0.0, p));
}

TEST_CASE("forced terms are linear in eps") {
    auto p = params(1, 1.0);
    p.mu1 = 0.6;
    p.mu2 = 0.8;
    p.beta1 = 0.3;
    const SlowFlowState s{6.0, 0.5, 1.2};
    const auto d0 = slow_flow_rhs(s, 0.7, p);
    p.eps = 1e-3;
    const auto d1 = slow_flow_rhs(s, 0.7, p);
    p.eps = 2e-3;
    const auto d2 = slow_flow_rhs(s, 0.7, p);
    CHECK((d2.rho - d0.rho) == doctest::Approx(2.0 * (d1.rho - d0.rho)).epsilon(1e-12));
    CHECK((d2.theta - d0.theta) == doctest::Approx(2.0 * (d1.theta - d0.theta)).epsilon(1e-9));
    CHECK((d2.delta - d0.delta) == doctest::Approx(2.0 * (d1.delta - d0.delta)).epsilon(1e-9));
}

TEST_CASE("closed-form orbit solves the angle flow and conserves I") {
    for (double K : {0.05, 0.3, 0.9}) {
        double worst_ode = 0.0, worst_I = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double t = (pi / K) * i / 100.0;
            const auto a = exact_solution_tau2(K, t);
            worst_I = std::max(worst_I, std::abs(first_integral(a.theta, a.delta) - K));
            const double h = 1e-6;
            const auto ap = exact_solution_tau2(K, t + h), am = exact_solution_tau2(K, t - h);
            const auto f = unperturbed_rhs_tau2(a.theta, a.delta);
            worst_ode = std::max({worst_ode, std::abs((ap.theta - am.theta) / (2 * h) - f.theta),
                                  std::abs((ap.delta - am.delta) / (2 * h) - f.delta)});
        }
        CHECK(worst_I <= 1e-12);
        CHECK(worst_ode <= 1e-7);
    }
    CHECK(kind_of([] { exact_solution_tau2(1.0, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("half-period symmetry of the closed-form orbit") {
    for (double K : {0.1, 0.5, 0.9}) {
        const double T = pi / K;
        for (int i = 0; i < 50; ++i) {
            const double t = T * i / 50.0;
            const auto a = exact_solution_tau2(K, t);
            const auto b = exact_solution_tau2(K, t + 0.5 * T);
            CHECK(std::abs(b.delta - (pi - a.delta)) <= 1e-12);
            CHECK(std::abs(b.theta - (0.5 * pi - a.theta)) <= 1e-12);
        }
    }
}

TEST_CASE("measured period equals pi / K") {
    for (double K : {0.1, 0.5, 0.9}) {
        const double theta0 = 0.5 * std::asin(K);
        CHECK(std::abs(measured_period_tau2(theta0) / (pi / K) - 1.0) <= 1e-6);
    }
    CHECK(kind_of([] { measured_period_tau2(0.9); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("family parameterization") {
    for (int k : {1, 2, 3}) {
        for (double P : {0.5, 1.0, 2.0}) {
            const double thr = family_threshold(k, P);
            CHECK(thr == doctest::Approx(2.0 * k * P * P * std::sqrt(double(k))));
            CHECK(family_K(thr, k, P) == doctest::Approx(1.0));
            const double rho = 3.0 * thr;
            CHECK(rho_for_K(family_K(rho, k, P), k, P) == doctest::Approx(rho));
            const double h = 1e-5 * rho;
            CHECK(family_dK_drho(rho, k, P) ==
                  doctest::Approx((family_K(rho + h, k, P) - family_K(rho - h, k, P)) / (2 * h)).epsilon(1e-8));
            CHECK(family_point(rho, k, P).period == doctest::Approx(2.0 * pi / P));
        }
    }
    CHECK(kind_of([] { periodic_family(family_threshold(1, 1.0), 0.0, params(1, 1.0)); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([] { rho_for_K(0.0, 1, 1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("family orbit is the closed-form orbit at level K(rho)") {
    const auto p = params(2, 1.5);
    const double rho = rho_for_K(0.3, p.k, p.P);
    for (double tau : {0.0, 0.4, 1.7, 3.9}) {
        const auto a = periodic_family(rho, tau, p);
        const auto b = exact_solution_tau2(0.3, tau2_rate(rho, p.k, p.P) * tau);
        CHECK(a.theta == doctest::Approx(b.theta).epsilon(1e-12));
        CHECK(a.delta == doctest::Approx(b.delta).epsilon(1e-12));
    }
    const auto start = periodic_family(rho, 0.0, p);
    CHECK(start.delta == doctest::Approx(0.5 * pi));
    CHECK(std::sin(2.0 * start.theta) == doctest::Approx(0.3));
}

TEST_CASE("family orbits close after 2 pi / P") {
    for (int k : {1, 2}) {
        for (double K : {0.9, 0.5, 0.1, 0.01}) {
            const auto p = params(k, 1.0);
            CHECK(family_residual(rho_for_K(K, k, 1.0), p, numerics::IntegratorSpec::adaptive(1e-12)) <= 1e-8);
        }
    }
}

TEST_CASE("large-rho limit of the family") {
    const auto p = params(1, 1.0);
    const double rho = rho_for_K(1e-6, 1, 1.0);
    for (double tau : {0.5, 1.0, 2.5, 4.0, 5.5}) {
        const auto a = periodic_family(rho, tau, p);
        const auto b = periodic_family_limit(tau, 1.0);
        CHECK(std::abs(a.theta - b.theta) <= 1e-5);
        CHECK(std::abs(a.delta - b.delta) <= 1e-4);
    }
}

TEST_CASE("first integral drift over ten periods") {
    const auto p = params(1, 1.0);
    const double rho = rho_for_K(0.5, 1, 1.0);
    const auto s = periodic_family(rho, 0.0, p);
    const std::vector<double> y0{rho, s.theta, s.delta};
    const auto traj = numerics::integrate(slow_flow_field(p), y0, 0.0, 20.0 * pi, numerics::IntegratorSpec::adaptive(1e-12));
    double drift = 0.0;
    for (std::size_t i = 0; i <= traj.num_steps(); ++i) {
        const auto y = traj.node(i);
        drift = std::max(drift, std::abs(first_integral(y[1], y[2]) - 0.5));
    }
    CHECK(drift <= 1e-8);
}

TEST_CASE("analytic Jacobian matches central differences") {
    for (double eps : {0.0, 0.05}) {
        auto p = params(2, 1.3);
        p.eps = eps;
        p.mu1 = 0.6;
        p.mu2 = -0.8;
        p.beta1 = 0.9;
        const SlowFlowState s{9.0, 0.45, 2.1};
        const auto J = slow_flow_jacobian(s, 0.8, p);
        for (int j = 0; j < 3; ++j) {
            auto a = s.as_array(), b = s.as_array();
            const double h = 1e-6 * (1.0 + std::abs(a[j]));
            a[j] += h;
            b[j] -= h;
            const auto fa = slow_flow_rhs(SlowFlowState::from(a), 0.8, p).as_array();
            const auto fb = slow_flow_rhs(SlowFlowState::from(b), 0.8, p).as_array();
            for (int i = 0; i < 3; ++i) CHECK(J[i][j] == doctest::Approx((fa[i] - fb[i]) / (2 * h)).epsilon(1e-6));
        }
    }
}
