#include "avm/lattice.hpp"

#include "avm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace avm::lattice {

using std::numbers::pi;

void LatticeConfig::validate() const {
    if (N < 1) throw Error(ErrorKind::InvalidArgument, "lattice needs N >= 1 particles");
    if (!(c >= 0.0)) throw Error(ErrorKind::InvalidArgument, "damping c must be non-negative");
    for (const auto& f : forcing) {
        if (f.p < 1 || f.p > N) {
            std::ostringstream os;
            os << "forcing mode index " << f.p << " outside 1.." << N;
            throw Error(ErrorKind::InvalidArgument, os.str());
        }
        if (!std::isfinite(f.amplitude))
            throw Error(ErrorKind::InvalidArgument, "forcing amplitude must be finite");
    }
}

double LatticeConfig::drive_frequency(const ForcingEntry& f) const {
    return f.drive_frequency ? *f.drive_frequency : nnm_frequency(f.p, N);
}

LatticeState LatticeState::zeros(int N) {
    const auto n = static_cast<std::size_t>(N);
    return {std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
            std::vector<double>(n)};
}

LatticeState LatticeState::from_flat(std::span<const double> y) {
    const std::size_t n = y.size() / 4;
    LatticeState st;
    st.s.assign(y.begin(), y.begin() + n);
    st.w.assign(y.begin() + n, y.begin() + 2 * n);
    st.ds.assign(y.begin() + 2 * n, y.begin() + 3 * n);
    st.dw.assign(y.begin() + 3 * n, y.end());
    return st;
}

std::vector<double> LatticeState::flat() const {
    std::vector<double> y;
    y.reserve(4 * w.size());
    y.insert(y.end(), s.begin(), s.end());
    y.insert(y.end(), w.begin(), w.end());
    y.insert(y.end(), ds.begin(), ds.end());
    y.insert(y.end(), dw.begin(), dw.end());
    return y;
}

double nnm_frequency(int p, int N) {
    if (N < 1 || p < 1 || p > N) {
        std::ostringstream os;
        os << "mode index p=" << p << " outside 1.." << N;
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
    return 2.0 * std::sin(pi * p / (2.0 * (N + 1)));
}

Eigen::VectorXd mode_shape(int p, int N) {
    nnm_frequency(p, N);  // range check
    Eigen::VectorXd phi(N);
    for (int i = 1; i <= N; ++i) phi[i - 1] = std::sin(pi * p * i / (N + 1.0));
    return phi;
}

Eigen::MatrixXd stiffness_matrix(int N) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        M(i, i) = 2.0;
        if (i > 0) M(i, i - 1) = -1.0;
        if (i + 1 < N) M(i, i + 1) = -1.0;
    }
    return M;
}

void transverse_forcing(const LatticeConfig& cfg, double tau, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& f : cfg.forcing) {
        const double a = f.amplitude * std::cos(cfg.drive_frequency(f) * tau);
        for (int i = 1; i <= cfg.N; ++i)
            out[static_cast<std::size_t>(i - 1)] += a * std::sin(f.p * i * pi / (cfg.N + 1.0));
    }
}

void exact_lattice_rhs(std::span<const double> y, double tau, const LatticeConfig& cfg,
                       std::span<double> dydt) {
    const auto n = static_cast<std::size_t>(cfg.N);
    const double* s = y.data();
    const double* w = y.data() + n;
    const double* ds = y.data() + 2 * n;
    const double* dw = y.data() + 3 * n;
    auto at = [n](const double* v, std::size_t i) { return (i == 0 || i == n + 1) ? 0.0 : v[i - 1]; };

    // Spring j joins particles j and j + 1 (j = 0..N); store tension-like
    // (delta + c delta') and direction cosines.
    thread_local std::vector<double> force, cosp, sinp;
    force.resize(n + 1);
    cosp.resize(n + 1);
    sinp.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        const double ax = at(s, j + 1) - at(s, j);  // axial stretch, dx - 1
        const double dx = 1.0 + ax;
        const double dy = at(w, j + 1) - at(w, j);
        const double len = std::hypot(dx, dy);
        if (!(len > 0.0)) {
            std::ostringstream os;
            os << "spring " << j << " has zero length";
            throw Error(ErrorKind::DegenerateSpring, os.str());
        }
        // len - 1 without cancellation.
        const double delta = (dy * dy + ax * (2.0 + ax)) / (len + 1.0);
        const double ddelta =
            (dy * (at(dw, j + 1) - at(dw, j)) + dx * (at(ds, j + 1) - at(ds, j))) / len;
        force[j] = delta + cfg.c * ddelta;
        cosp[j] = dx / len;
        sinp[j] = dy / len;
    }

    std::copy(ds, ds + n, dydt.begin());
    std::copy(dw, dw + n, dydt.begin() + static_cast<std::ptrdiff_t>(n));
    double* dds = dydt.data() + 2 * n;
    double* ddw = dydt.data() + 3 * n;
    transverse_forcing(cfg, tau, {ddw, n});
    for (std::size_t i = 1; i <= n; ++i) {
        dds[i - 1] = force[i] * cosp[i] - force[i - 1] * cosp[i - 1];
        ddw[i - 1] += force[i] * sinp[i] - force[i - 1] * sinp[i - 1];
    }
}

LatticeState exact_lattice_rhs(const LatticeState& state, double tau, const LatticeConfig& cfg) {
    const auto y = state.flat();
    std::vector<double> d(y.size());
    exact_lattice_rhs(y, tau, cfg, d);
    return LatticeState::from_flat(d);
}

double exact_lattice_energy(std::span<const double> y, int N) {
    const auto n = static_cast<std::size_t>(N);
    double e = 0.0;
    for (std::size_t i = 0; i < 2 * n; ++i) e += 0.5 * y[2 * n + i] * y[2 * n + i];
    auto at = [&](std::size_t block, std::size_t i) {
        return (i == 0 || i == n + 1) ? 0.0 : y[block * n + i - 1];
    };
    for (std::size_t j = 0; j <= n; ++j) {
        const double ax = at(0, j + 1) - at(0, j);
        const double dy = at(1, j + 1) - at(1, j);
        const double len = std::hypot(1.0 + ax, dy);
        const double delta = (dy * dy + ax * (2.0 + ax)) / (len + 1.0);
        e += 0.5 * delta * delta;
    }
    return e;
}

void reduced_rhs(std::span<const double> w, std::span<double> out) {
    const std::size_t n = w.size();
    auto at = [&](std::size_t i) { return (i == 0 || i == n + 1) ? 0.0 : w[i - 1]; };
    double sum = 0.0;
    for (std::size_t q = 0; q <= n; ++q) {
        const double d = at(q + 1) - at(q);
        sum += d * d;
    }
    const double scale = -sum / (2.0 * static_cast<double>(n + 1));
    for (std::size_t i = 1; i <= n; ++i)
        out[i - 1] = scale * (2.0 * at(i) - at(i + 1) - at(i - 1));
}

std::vector<double> reduced_rhs(std::span<const double> w) {
    std::vector<double> out(w.size());
    reduced_rhs(w, out);
    return out;
}

Eigen::VectorXd reduced_rhs_matrix(const Eigen::VectorXd& w) {
    const auto N = static_cast<int>(w.size());
    const Eigen::VectorXd Mw = stiffness_matrix(N) * w;
    return -Mw.dot(w) / (2.0 * (N + 1)) * Mw;
}

double reduced_energy(std::span<const double> w, std::span<const double> dw) {
    const std::size_t n = w.size();
    auto at = [&](std::size_t i) { return (i == 0 || i == n + 1) ? 0.0 : w[i - 1]; };
    double quad = 0.0;
    for (std::size_t q = 0; q <= n; ++q) {
        const double d = at(q + 1) - at(q);
        quad += d * d;
    }
    double kin = 0.0;
    for (double v : dw) kin += 0.5 * v * v;
    return kin + quad * quad / (8.0 * static_cast<double>(n + 1));
}

ModalState modal_rhs(const ModalState& state, double tau, std::span<const ForcingEntry> forcing,
                     int N) {
    const auto n = static_cast<std::size_t>(N);
    if (state.amp.size() != n || state.vel.size() != n)
        throw Error(ErrorKind::InvalidArgument, "modal state size does not match N");
    std::vector<double> omega(n);
    for (std::size_t i = 0; i < n; ++i) omega[i] = nnm_frequency(static_cast<int>(i) + 1, N);

    double coupling = 0.0;
    if (state.convention == ModalConvention::C) {
        for (std::size_t i = 0; i < n; ++i) coupling += state.amp[i] * state.amp[i] * omega[i] * omega[i];
        coupling *= 0.25;
    } else {
        for (std::size_t i = 0; i < n; ++i) coupling += state.amp[i] * state.amp[i];
    }

    ModalState d;
    d.convention = state.convention;
    d.amp = state.vel;
    d.vel.resize(n);
    for (std::size_t p = 0; p < n; ++p) d.vel[p] = -coupling * omega[p] * omega[p] * state.amp[p];
    for (const auto& f : forcing) {
        const auto p = static_cast<std::size_t>(f.p - 1);
        if (f.p < 1 || p >= n) throw Error(ErrorKind::InvalidArgument, "forcing mode out of range");
        const double drive = f.drive_frequency ? *f.drive_frequency : omega[p];
        const double weight = state.convention == ModalConvention::C ? 1.0 : 0.5 * omega[p];
        d.vel[p] += weight * f.amplitude * std::cos(drive * tau);
    }
    return d;
}

ModalState convert(const ModalState& state, ModalConvention to, int N) {
    if (state.convention == to) return state;
    ModalState out = state;
    out.convention = to;
    for (std::size_t i = 0; i < state.amp.size(); ++i) {
        const double half_omega = 0.5 * nnm_frequency(static_cast<int>(i) + 1, N);
        const double f = to == ModalConvention::A ? half_omega : 1.0 / half_omega;
        out.amp[i] *= f;
        out.vel[i] *= f;
    }
    return out;
}

std::vector<double> modal_projection(std::span<const double> w, int N) {
    const Eigen::Map<const Eigen::VectorXd> wv(w.data(), N);
    std::vector<double> C(static_cast<std::size_t>(N));
    for (int p = 1; p <= N; ++p)
        C[static_cast<std::size_t>(p - 1)] = mode_shape(p, N).dot(wv) * 2.0 / (N + 1.0);
    return C;
}

std::vector<double> modal_synthesis(std::span<const double> C, int N) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(N);
    for (int p = 1; p <= N; ++p) w += C[static_cast<std::size_t>(p - 1)] * mode_shape(p, N);
    return {w.data(), w.data() + N};
}

TwoModeState two_mode_rhs(const TwoModeState& y, double tau, const TwoModeParams& p) {
    const double ak = y[0], vk = y[1], ap = y[2], vp = y[3];
    const double r2 = ak * ak + ap * ap;
    return {vk, -r2 * p.omega_k * p.omega_k * ak - p.eps * p.mu1 * std::cos(p.omega_k * tau),
            vp, -r2 * p.omega_p * p.omega_p * ap - p.eps * p.mu2 * std::cos(p.omega_p * tau)};
}

double two_mode_energy(const TwoModeState& y, const TwoModeParams& p) {
    const double r2 = y[0] * y[0] + y[2] * y[2];
    return y[1] * y[1] / (2.0 * p.omega_k * p.omega_k) + y[3] * y[3] / (2.0 * p.omega_p * p.omega_p) +
           0.25 * r2 * r2;
}

double nnm_period(int p, int N, double modal_amplitude) {
    // Quarter period of x'' + g x^3 = 0 from amplitude a is
    // sqrt(2 / g) / a * int_0^1 (1 - u^4)^{-1/2} du, here with g = omega^4 / 4.
    const double lemniscate = std::pow(std::tgamma(0.25), 2) / (4.0 * std::sqrt(2.0 * pi));
    const double omega = nnm_frequency(p, N);
    const double g = 0.25 * std::pow(omega, 4);
    return 4.0 * std::sqrt(2.0 / g) * lemniscate / std::abs(modal_amplitude);
}

numerics::VectorField exact_lattice_field(const LatticeConfig& cfg) {
    return [cfg](double t, std::span<const double> y, std::span<double> dy) {
        exact_lattice_rhs(y, t, cfg, dy);
    };
}

numerics::VectorField reduced_field(const LatticeConfig& cfg) {
    return [cfg](double t, std::span<const double> y, std::span<double> dy) {
        const auto n = static_cast<std::size_t>(cfg.N);
        std::copy(y.begin() + static_cast<std::ptrdiff_t>(n), y.end(), dy.begin());
        std::span<double> acc = dy.subspan(n, n);
        reduced_rhs(y.subspan(0, n), acc);
        thread_local std::vector<double> f;
        f.resize(n);
        transverse_forcing(cfg, t, f);
        for (std::size_t i = 0; i < n; ++i) acc[i] += f[i];
    };
}

numerics::VectorField modal_field(std::vector<ForcingEntry> forcing, int N, ModalConvention conv) {
    return [forcing = std::move(forcing), N, conv](double t, std::span<const double> y,
                                                   std::span<double> dy) {
        const auto n = static_cast<std::size_t>(N);
        ModalState s{{y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)},
                     {y.begin() + static_cast<std::ptrdiff_t>(n), y.end()},
                     conv};
        const ModalState d = modal_rhs(s, t, forcing, N);
        std::copy(d.amp.begin(), d.amp.end(), dy.begin());
        std::copy(d.vel.begin(), d.vel.end(), dy.begin() + static_cast<std::ptrdiff_t>(n));
    };
}

ComparisonReport compare_exact_vs_reduced(const LatticeConfig& cfg, double amplitude_scale,
                                          double horizon, const ComparisonOptions& opts) {
    cfg.validate();
    if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "comparison horizon must be positive");
    if (opts.samples_per_period < 2)
        throw Error(ErrorKind::InvalidArgument, "need at least two samples per period");
    const int N = cfg.N;
    const auto n = static_cast<std::size_t>(N);

    ComparisonReport report;
    report.horizon = horizon;
    if (amplitude_scale == 0.0) {
        report.nnm_period = std::numeric_limits<double>::infinity();
        report.samples = 1;
        return report;
    }

    const Eigen::VectorXd phi = mode_shape(opts.mode, N);
    const double modal_amp = amplitude_scale / phi.cwiseAbs().maxCoeff();
    report.nnm_period = nnm_period(opts.mode, N, modal_amp);

    std::vector<double> exact0(4 * n, 0.0), reduced0(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        exact0[n + i] = modal_amp * phi[static_cast<Eigen::Index>(i)];
        reduced0[i] = exact0[n + i];
    }
    const auto exact = numerics::integrate(exact_lattice_field(cfg), exact0, 0.0, horizon, opts.integrator);
    const auto reduced = numerics::integrate(reduced_field(cfg), reduced0, 0.0, horizon, opts.integrator);

    const double periods = horizon / report.nnm_period;
    report.samples = static_cast<std::size_t>(std::ceil(periods * (opts.samples_per_period - 1))) + 1;
    std::vector<double> ye(4 * n), yr(2 * n);
    const double e0 = exact_lattice_energy(exact0, N);
    for (std::size_t m = 0; m < report.samples; ++m) {
        const double t = horizon * static_cast<double>(m) / static_cast<double>(report.samples - 1);
        exact.at(t, ye);
        reduced.at(t, yr);
        for (std::size_t i = 0; i < n; ++i)
            report.mismatch = std::max(report.mismatch, std::abs(ye[n + i] - yr[i]));
        report.exact_energy_drift =
            std::max(report.exact_energy_drift, std::abs(exact_lattice_energy(ye, N) - e0));
    }
    return report;
}

} // namespace avm::lattice
