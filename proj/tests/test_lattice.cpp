#include "avm/error.hpp"
#include "avm/lattice.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace avm;
using namespace avm::lattice;
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

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace

TEST_CASE("NNM frequencies and mode shapes diagonalize the stiffness matrix") {
    for (int N : {1, 2, 4, 7, 16, 32}) {
        const Eigen::MatrixXd M = stiffness_matrix(N);
        for (int p = 1; p <= N; ++p) {
            const Eigen::VectorXd phi = mode_shape(p, N);
            const double w = nnm_frequency(p, N);
            CHECK(w == doctest::Approx(2.0 * std::sin(pi * p / (2.0 * (N + 1)))));
            CHECK((M * phi - w * w * phi).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(std::abs(phi.dot(phi) - 0.5 * (N + 1)) <= 1e-12);
            for (int q = p + 1; q <= N; ++q) CHECK(std::abs(phi.dot(mode_shape(q, N))) <= 1e-12);
        }
    }
    CHECK(kind_of([] { nnm_frequency(0, 3); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { nnm_frequency(4, 3); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("config validation") {
    LatticeConfig cfg;
    cfg.N = 0;
    CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidArgument);
    cfg.N = 3;
    cfg.c = -0.1;
    CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidArgument);
    cfg.c = 0.0;
    cfg.forcing = {{4, 1.0, {}}};
    CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidArgument);
    cfg.forcing = {{2, 1.0, {}}};
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.drive_frequency(cfg.forcing[0]) == doctest::Approx(nnm_frequency(2, 3)));
    cfg.forcing[0].drive_frequency = 0.3;
    CHECK(cfg.drive_frequency(cfg.forcing[0]) == 0.3);
}

TEST_CASE("transverse forcing is the mode shape times the drive") {
    LatticeConfig cfg;
    cfg.N = 5;
    cfg.forcing = {{2, 0.7, {}}};
    std::vector<double> f(5);
    const double tau = 1.3;
    transverse_forcing(cfg, tau, f);
    const Eigen::VectorXd phi = mode_shape(2, 5);
    for (int i = 0; i < 5; ++i) CHECK(f[i] == doctest::Approx(0.7 * std::cos(nnm_frequency(2, 5) * tau) * phi[i]));
}

TEST_CASE("exact lattice right-hand side") {
    LatticeConfig cfg;
    cfg.N = 4;
    SUBCASE("rest state is an equilibrium") {
        const auto d = exact_lattice_rhs(LatticeState::zeros(4), 0.0, cfg);
        for (int i = 0; i < 4; ++i) {
            CHECK(d.s[i] == 0.0);
            CHECK(d.w[i] == 0.0);
            CHECK(d.ds[i] == 0.0);
            CHECK(d.dw[i] == 0.0);
        }
    }
    SUBCASE("flat layout round trip") {
        LatticeState st = LatticeState::zeros(4);
        for (int i = 0; i < 4; ++i) {
            st.s[i] = 0.01 * i;
            st.w[i] = -0.02 * i;
            st.ds[i] = 0.1;
            st.dw[i] = 0.2 * i;
        }
        const auto back = LatticeState::from_flat(st.flat());
        CHECK(back.s == st.s);
        CHECK(back.w == st.w);
        CHECK(back.ds == st.ds);
        CHECK(back.dw == st.dw);
    }
    SUBCASE("purely axial stretch produces a linear restoring force") {
        LatticeState st = LatticeState::zeros(4);
        st.s[1] = 1e-3;
        const auto d = exact_lattice_rhs(st, 0.0, cfg);
        // Particle 2 is pulled back with unit stiffness from both sides.
        CHECK(d.ds[1] == doctest::Approx(-2e-3).epsilon(1e-9));
        CHECK(d.ds[0] == doctest::Approx(1e-3).epsilon(1e-9));
        CHECK(d.dw[1] == 0.0);
    }
    SUBCASE("zero-length spring is rejected") {
        LatticeState st = LatticeState::zeros(4);
        st.s[0] = -1.0;
        CHECK(kind_of([&] { exact_lattice_rhs(st, 0.0, cfg); }) == ErrorKind::DegenerateSpring);
    }
    SUBCASE("energy is conserved without damping or forcing") {
        std::vector<double> y(16, 0.0);
        for (int i = 0; i < 4; ++i) y[4 + i] = 0.1 * std::sin(pi * (i + 1) / 5.0);
        const auto e0 = exact_lattice_energy(y, 4);
        const auto y1 = numerics::propagate(exact_lattice_field(cfg), y, 0.0, 200.0, numerics::IntegratorSpec::adaptive(1e-11));
        CHECK(std::abs(exact_lattice_energy(y1, 4) - e0) <= 1e-9 * std::max(1.0, e0) + 1e-12);
    }
    SUBCASE("damping dissipates energy") {
        LatticeConfig damped = cfg;
        damped.c = 0.05;
        std::vector<double> y(16, 0.0);
        for (int i = 0; i < 4; ++i) y[4 + i] = 0.1 * std::sin(pi * (i + 1) / 5.0);
        const auto e0 = exact_lattice_energy(y, 4);
        const auto y1 = numerics::propagate(exact_lattice_field(damped), y, 0.0, 200.0, numerics::IntegratorSpec{});
        CHECK(exact_lattice_energy(y1, 4) < e0);
    }
}

TEST_CASE("reduced system: componentwise and matrix forms agree") {
    for (int N : {1, 3, 8, 20}) {
        Eigen::VectorXd w(N);
        for (int i = 0; i < N; ++i) w[i] = std::sin(0.7 * i + 0.3) * 0.2 + 0.01 * i;
        const auto a = reduced_rhs(std::span<const double>(w.data(), N));
        const Eigen::VectorXd b = reduced_rhs_matrix(w);
        for (int i = 0; i < N; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-14);
    }
}

TEST_CASE("NNM ansatz reduces to the cubic amplitude equation") {
    const int N = 6;
    for (int p = 1; p <= N; ++p) {
        const double A = 0.37;
        const Eigen::VectorXd w = A * mode_shape(p, N);
        const Eigen::VectorXd acc = reduced_rhs_matrix(w);
        const double om = nnm_frequency(p, N);
        CHECK((acc + 0.25 * std::pow(om, 4) * A * A * A * mode_shape(p, N)).cwiseAbs().maxCoeff() <= 1e-13);
    }
}

TEST_CASE("reduced energy is conserved") {
    LatticeConfig cfg;
    cfg.N = 5;
    std::vector<double> y(10, 0.0);
    for (int i = 0; i < 5; ++i) y[i] = 0.3 * std::sin(0.9 * i + 0.2);
    const double e0 = reduced_energy(std::span(y).subspan(0, 5), std::span(y).subspan(5, 5));
    const auto y1 = numerics::propagate(reduced_field(cfg), y, 0.0, 300.0, numerics::IntegratorSpec::adaptive(1e-11));
    const double e1 = reduced_energy(std::span(y1).subspan(0, 5), std::span(y1).subspan(5, 5));
    CHECK(std::abs(e1 - e0) <= 1e-8 * e0);
}

TEST_CASE("modal projection and synthesis are inverse") {
    const int N = 7;
    std::vector<double> w(N);
    for (int i = 0; i < N; ++i) w[i] = std::cos(1.1 * i) - 0.2;
    const auto C = modal_projection(w, N);
    CHECK(sup_diff(modal_synthesis(C, N), w) <= 1e-14);
}

TEST_CASE("modal C and A conventions describe the same motion") {
    const int N = 4;
    const std::vector<ForcingEntry> forcing{{1, 0.02, {}}, {3, -0.01, {}}};
    ModalState c0{{0.3, 0.1, -0.05, 0.02}, {0.0, 0.01, 0.0, -0.02}, ModalConvention::C};
    const ModalState a0 = convert(c0, ModalConvention::A, N);
    CHECK(a0.amp[0] == doctest::Approx(0.5 * nnm_frequency(1, N) * 0.3));
    CHECK(sup_diff(convert(a0, ModalConvention::C, N).amp, c0.amp) <= 1e-15);

    auto flat = [](const ModalState& s) {
        std::vector<double> y = s.amp;
        y.insert(y.end(), s.vel.begin(), s.vel.end());
        return y;
    };
    const auto spec = numerics::IntegratorSpec::adaptive(1e-12);
    const auto yc = numerics::propagate(modal_field(forcing, N, ModalConvention::C), flat(c0), 0.0, 50.0, spec);
    const auto ya = numerics::propagate(modal_field(forcing, N, ModalConvention::A), flat(a0), 0.0, 50.0, spec);
    ModalState a1{{ya.begin(), ya.begin() + N}, {ya.begin() + N, ya.end()}, ModalConvention::A};
    const auto c1 = convert(a1, ModalConvention::C, N);
    CHECK(sup_diff(c1.amp, std::span(yc).subspan(0, N)) <= 1e-9);
    CHECK(sup_diff(c1.vel, std::span(yc).subspan(N, N)) <= 1e-9);
}

TEST_CASE("forced modal integration matches direct integration of the reduced system") {
    LatticeConfig cfg;
    cfg.N = 4;
    cfg.forcing = {{1, 0.01, {}}, {2, 0.005, {}}};
    const std::vector<double> C0{0.2, 0.05, 0.0, -0.03};
    const auto w0 = modal_synthesis(C0, 4);
    std::vector<double> yd(8, 0.0), ym(8, 0.0);
    std::copy(w0.begin(), w0.end(), yd.begin());
    std::copy(C0.begin(), C0.end(), ym.begin());
    const double T = 3.0 * nnm_period(1, 4, C0[0]);
    const auto spec = numerics::IntegratorSpec::adaptive(1e-12);
    const auto direct = numerics::integrate(reduced_field(cfg), yd, 0.0, T, spec);
    const auto modal = numerics::integrate(modal_field(cfg.forcing, 4, ModalConvention::C), ym, 0.0, T, spec);
    double worst = 0.0;
    for (int m = 0; m <= 300; ++m) {
        const double t = T * m / 300.0;
        const auto a = direct.at(t);
        const auto b = modal.at(t);
        const auto wb = modal_synthesis(std::span(b).subspan(0, 4), 4);
        worst = std::max(worst, sup_diff(std::span(a).subspan(0, 4), wb));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("NNM period of the cubic amplitude equation") {
    const int N = 3, p = 2;
    const double C0 = 0.4;
    const double T = nnm_period(p, N, C0);
    const double g = 0.25 * std::pow(nnm_frequency(p, N), 4);
    const numerics::VectorField f = [g](double, std::span<const double> y, std::span<double> d) {
        d[0] = y[1];
        d[1] = -g * y[0] * y[0] * y[0];
    };
    const std::vector<double> y0{C0, 0.0};
    const auto y1 = numerics::propagate(f, y0, 0.0, T, numerics::IntegratorSpec::adaptive(1e-12));
    CHECK(std::abs(y1[0] - C0) <= 1e-8);
    CHECK(std::abs(y1[1]) <= 1e-8);
    // Halfway through, the amplitude is reversed.
    const auto yh = numerics::propagate(f, y0, 0.0, 0.5 * T, numerics::IntegratorSpec::adaptive(1e-12));
    CHECK(std::abs(yh[0] + C0) <= 1e-8);
}

TEST_CASE("two-mode system") {
    TwoModeParams p;
    p.omega_k = nnm_frequency(1, 4);
    p.omega_p = nnm_frequency(3, 4);
    SUBCASE("matches the modal A-system restricted to two modes") {
        const TwoModeState y{0.2, 0.01, -0.1, 0.03};
        const auto d = two_mode_rhs(y, 0.4, p);
        ModalState s{{0.2, 0.0, -0.1, 0.0}, {0.01, 0.0, 0.03, 0.0}, ModalConvention::A};
        const auto dm = modal_rhs(s, 0.4, {}, 4);
        CHECK(d[1] == doctest::Approx(dm.vel[0]).epsilon(1e-14));
        CHECK(d[3] == doctest::Approx(dm.vel[2]).epsilon(1e-14));
        CHECK(d[0] == y[1]);
        CHECK(d[2] == y[3]);
    }
    SUBCASE("energy is conserved when unforced") {
        const numerics::VectorField f = [p](double t, std::span<const double> y, std::span<double> d) {
            const auto r = two_mode_rhs({y[0], y[1], y[2], y[3]}, t, p);
            std::copy(r.begin(), r.end(), d.begin());
        };
        const std::vector<double> y0{0.3, 0.0, 0.1, 0.02};
        const auto y1 = numerics::propagate(f, y0, 0.0, 500.0, numerics::IntegratorSpec::adaptive(1e-12));
        const double e0 = two_mode_energy({y0[0], y0[1], y0[2], y0[3]}, p);
        const double e1 = two_mode_energy({y1[0], y1[1], y1[2], y1[3]}, p);
        CHECK(std::abs(e1 - e0) <= 1e-9 * e0);
    }
    SUBCASE("forcing enters with a negative sign") {
        TwoModeParams q = p;
        q.eps = 0.1;
        q.mu1 = 0.6;
        q.mu2 = 0.8;
        const auto d = two_mode_rhs({0.0, 0.0, 0.0, 0.0}, 0.0, q);
        CHECK(d[1] == doctest::Approx(-0.06));
        CHECK(d[3] == doctest::Approx(-0.08));
    }
}

TEST_CASE("exact versus reduced model at small amplitude") {
    LatticeConfig cfg;
    cfg.N = 4;
    SUBCASE("zero amplitude gives zero mismatch") {
        const auto r = compare_exact_vs_reduced(cfg, 0.0, 10.0);
        CHECK(r.mismatch == 0.0);
    }
    SUBCASE("mismatch shrinks with the amplitude") {
        const double a = 0.1;
        const double horizon = 2.0 * nnm_period(1, 4, a / mode_shape(1, 4).maxCoeff());
        const auto big = compare_exact_vs_reduced(cfg, a, horizon);
        const auto small = compare_exact_vs_reduced(cfg, 0.5 * a, horizon);
        CHECK(big.mismatch > 0.0);
        CHECK(big.mismatch / small.mismatch >= 1.5);
        CHECK(big.exact_energy_drift <= 1e-8);
    }
    CHECK(kind_of([&] { compare_exact_vs_reduced(cfg, 0.1, -1.0); }) == ErrorKind::InvalidArgument);
}
