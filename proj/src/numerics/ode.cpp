#include "avm/numerics/ode.hpp"

#include "avm/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace avm::numerics {

void IntegratorSpec::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw Error(ErrorKind::InvalidArgument, "integrator tolerances must be positive");
    if (!(max_step > 0.0))
        throw Error(ErrorKind::InvalidArgument, "integrator max_step must be positive");
    if (method == OdeMethod::RK4Fixed && !(initial_step > 0.0))
        throw Error(ErrorKind::InvalidArgument, "fixed-step RK4 needs initial_step > 0");
    if (initial_step < 0.0)
        throw Error(ErrorKind::InvalidArgument, "initial_step must be non-negative");
}

Trajectory::Trajectory(std::size_t dim, double t0, std::span<const double> y0) : dim_(dim) {
    times_.push_back(t0);
    nodes_.assign(y0.begin(), y0.end());
}

std::span<const double> Trajectory::node(std::size_t i) const {
    return {nodes_.data() + i * dim_, dim_};
}

State Trajectory::final_state() const {
    auto n = node(num_steps());
    return {n.begin(), n.end()};
}

void Trajectory::push_step(double t_new, std::span<const double> y_new,
                           std::span<const double> coeffs) {
    times_.push_back(t_new);
    nodes_.insert(nodes_.end(), y_new.begin(), y_new.end());
    coeffs_.insert(coeffs_.end(), coeffs.begin(), coeffs.end());
}

State Trajectory::at(double t) const {
    State out(dim_);
    at(t, out);
    return out;
}

void Trajectory::at(double t, std::span<double> out) const {
    const double span = t_end() - t_begin();
    const double slack = 1e-12 * std::max(1.0, std::abs(span));
    if (t < t_begin() - slack || t > t_end() + slack) {
        std::ostringstream os;
        os << "dense output requested at t=" << t << " outside [" << t_begin() << ", " << t_end()
           << "]";
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
    if (num_steps() == 0) {
        std::copy_n(nodes_.begin(), dim_, out.begin());
        return;
    }
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    i = std::min(i, num_steps() - 1);
    const double h = times_[i + 1] - times_[i];
    const double s = std::clamp((t - times_[i]) / h, 0.0, 1.0);
    const double s1 = 1.0 - s;
    const double* r = coeffs_.data() + i * 5 * dim_;
    for (std::size_t j = 0; j < dim_; ++j) {
        const double r1 = r[j], r2 = r[dim_ + j], r3 = r[2 * dim_ + j], r4 = r[3 * dim_ + j],
                     r5 = r[4 * dim_ + j];
        out[j] = r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
    }
}

namespace {

// Dormand-Prince 5(4) tableau with Hairer's dense-output weights.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

class Stepper {
public:
    Stepper(const VectorField& rhs, std::size_t n, StepStats& stats)
        : rhs_(rhs), n_(n), stats_(stats) {
        for (auto& k : k_) k.resize(n);
        tmp_.resize(n);
        ynew_.resize(n);
        coeffs_.resize(5 * n);
    }

    void eval(double t, std::span<const double> y, std::span<double> out) {
        rhs_(t, y, out);
        ++stats_.rhs_evaluations;
        for (double v : out) {
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "vector field returned a non-finite value at t=" << t;
                throw Error(ErrorKind::NonFinite, os.str());
            }
        }
    }

    template <class OnStep>
    void run_adaptive(State& y, double t0, double t1, const IntegratorSpec& spec, OnStep&& on_step) {
        double t = t0;
        eval(t, y, k_[0]);
        double h = spec.initial_step > 0.0 ? spec.initial_step : initial_step(y, t, t1, spec);
        h = std::min({h, spec.max_step, t1 - t0});
        double err_old = 1e-4;
        bool last_rejected = false;
        std::size_t steps = 0;

        while (t < t1) {
            if (++steps > spec.max_steps)
                throw Error(ErrorKind::MaxIterations, "integrator exceeded max_steps");
            const double remaining = t1 - t;
            bool final_step = false;
            if (h >= remaining * (1.0 - 1e-12)) {
                h = remaining;
                final_step = true;
            }
            if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
                std::ostringstream os;
                os << "step size underflow at t=" << t << " (h=" << h << ")";
                throw Error(ErrorKind::StepUnderflow, os.str());
            }

            const double err = try_step(y, t, h, spec);
            if (err <= 1.0) {
                const double t_new = final_step ? t1 : t + h;
                build_dense(y, h);
                y.swap(ynew_);
                std::swap(k_[0], k_[6]);  // FSAL
                t = t_new;
                ++stats_.accepted;
                on_step(t, y, coeffs_);
                // PI controller (Hairer's dopri5 defaults).
                double fac = std::pow(std::max(err, 1e-10), 0.2 - 0.04 * 0.75) *
                             std::pow(err_old, -0.04);
                fac = std::clamp(fac / 0.9, 1.0 / 10.0, 1.0 / 0.2);
                double h_new = h / fac;
                if (last_rejected) h_new = std::min(h_new, h);
                h = std::min(h_new, spec.max_step);
                err_old = std::max(err, 1e-4);
                last_rejected = false;
            } else {
                ++stats_.rejected;
                const double fac = std::min(1.0 / 0.2, std::pow(err, 0.2) / 0.9);
                h /= fac;
                last_rejected = true;
            }
        }
    }

    template <class OnStep>
    void run_fixed(State& y, double t0, double t1, const IntegratorSpec& spec, OnStep&& on_step) {
        const double span = t1 - t0;
        const std::size_t n_steps =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / spec.initial_step - 1e-9)));
        if (n_steps > spec.max_steps)
            throw Error(ErrorKind::MaxIterations, "fixed-step RK4 would exceed max_steps");
        const double h = span / static_cast<double>(n_steps);
        auto& f0 = k_[0];
        eval(t0, y, f0);
        for (std::size_t i = 0; i < n_steps; ++i) {
            const double t = t0 + static_cast<double>(i) * h;
            const double t_new = (i + 1 == n_steps) ? t1 : t0 + static_cast<double>(i + 1) * h;
            rk4_step(y, t, h);
            // Hermite data: f at the new node goes into k_[6].
            eval(t_new, ynew_, k_[6]);
            for (std::size_t j = 0; j < n_; ++j) {
                const double dy = ynew_[j] - y[j];
                const double bspl = h * f0[j] - dy;
                coeffs_[j] = y[j];
                coeffs_[n_ + j] = dy;
                coeffs_[2 * n_ + j] = bspl;
                coeffs_[3 * n_ + j] = dy - h * k_[6][j] - bspl;
                coeffs_[4 * n_ + j] = 0.0;
            }
            y.swap(ynew_);
            std::swap(k_[0], k_[6]);
            ++stats_.accepted;
            on_step(t_new, y, coeffs_);
        }
    }

private:
    double initial_step(const State& y, double t, double t1, const IntegratorSpec& spec) {
        // Hairer & Wanner's starting-step heuristic for a 5th-order method.
        double dnf = 0.0, dny = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            const double sk = spec.abs_tol + spec.rel_tol * std::abs(y[j]);
            dnf += (k_[0][j] / sk) * (k_[0][j] / sk);
            dny += (y[j] / sk) * (y[j] / sk);
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
        h = std::min({h, spec.max_step, t1 - t});
        for (std::size_t j = 0; j < n_; ++j) tmp_[j] = y[j] + h * k_[0][j];
        eval(t + h, tmp_, k_[1]);
        double der2 = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            const double sk = spec.abs_tol + spec.rel_tol * std::abs(y[j]);
            const double d = (k_[1][j] - k_[0][j]) / sk;
            der2 += d * d;
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 =
            der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
        return std::min({100.0 * h, h1, spec.max_step, t1 - t});
    }

    double try_step(const State& y, double t, double h, const IntegratorSpec& spec) {
        auto& k1 = k_[0];
        auto& k2 = k_[1];
        auto& k3 = k_[2];
        auto& k4 = k_[3];
        auto& k5 = k_[4];
        auto& k6 = k_[5];
        auto& k7 = k_[6];
        for (std::size_t j = 0; j < n_; ++j) tmp_[j] = y[j] + h * a21 * k1[j];
        eval(t + c2 * h, tmp_, k2);
        for (std::size_t j = 0; j < n_; ++j) tmp_[j] = y[j] + h * (a31 * k1[j] + a32 * k2[j]);
        eval(t + c3 * h, tmp_, k3);
        for (std::size_t j = 0; j < n_; ++j)
            tmp_[j] = y[j] + h * (a41 * k1[j] + a42 * k2[j] + a43 * k3[j]);
        eval(t + c4 * h, tmp_, k4);
        for (std::size_t j = 0; j < n_; ++j)
            tmp_[j] = y[j] + h * (a51 * k1[j] + a52 * k2[j] + a53 * k3[j] + a54 * k4[j]);
        eval(t + c5 * h, tmp_, k5);
        for (std::size_t j = 0; j < n_; ++j)
            tmp_[j] =
                y[j] + h * (a61 * k1[j] + a62 * k2[j] + a63 * k3[j] + a64 * k4[j] + a65 * k5[j]);
        eval(t + h, tmp_, k6);
        for (std::size_t j = 0; j < n_; ++j)
            ynew_[j] = y[j] + h * (a71 * k1[j] + a73 * k3[j] + a74 * k4[j] + a75 * k5[j] +
                                   a76 * k6[j]);
        eval(t + h, ynew_, k7);

        double err = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            const double e = h * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j] + e6 * k6[j] +
                                  e7 * k7[j]);
            const double sk =
                spec.abs_tol + spec.rel_tol * std::max(std::abs(y[j]), std::abs(ynew_[j]));
            err += (e / sk) * (e / sk);
        }
        return std::sqrt(err / static_cast<double>(n_));
    }

    void build_dense(const State& y, double h) {
        for (std::size_t j = 0; j < n_; ++j) {
            const double dy = ynew_[j] - y[j];
            const double bspl = h * k_[0][j] - dy;
            coeffs_[j] = y[j];
            coeffs_[n_ + j] = dy;
            coeffs_[2 * n_ + j] = bspl;
            coeffs_[3 * n_ + j] = dy - h * k_[6][j] - bspl;
            coeffs_[4 * n_ + j] = h * (d1 * k_[0][j] + d3 * k_[2][j] + d4 * k_[3][j] +
                                       d5 * k_[4][j] + d6 * k_[5][j] + d7 * k_[6][j]);
        }
    }

    void rk4_step(const State& y, double t, double h) {
        auto& k1 = k_[0];
        auto& k2 = k_[1];
        auto& k3 = k_[2];
        auto& k4 = k_[3];
        for (std::size_t j = 0; j < n_; ++j) tmp_[j] = y[j] + 0.5 * h * k1[j];
        eval(t + 0.5 * h, tmp_, k2);
        for (std::size_t j = 0; j < n_; ++j) tmp_[j] = y[j] + 0.5 * h * k2[j];
        eval(t + 0.5 * h, tmp_, k3);
        for (std::size_t j = 0; j < n_; ++j) tmp_[j] = y[j] + h * k3[j];
        eval(t + h, tmp_, k4);
        for (std::size_t j = 0; j < n_; ++j)
            ynew_[j] = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }

    const VectorField& rhs_;
    std::size_t n_;
    StepStats& stats_;
    std::array<State, 7> k_;
    State tmp_, ynew_;
    std::vector<double> coeffs_;
};

void check_span(double t0, double t1) {
    if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1))
        throw Error(ErrorKind::InvalidArgument, "integration span requires finite t1 > t0");
}

template <class OnStep>
void drive(const VectorField& rhs, State& y, double t0, double t1, const IntegratorSpec& spec,
           StepStats& stats, OnStep&& on_step) {
    spec.validate();
    check_span(t0, t1);
    for (double v : y)
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "initial state is not finite");
    Stepper stepper(rhs, y.size(), stats);
    if (spec.method == OdeMethod::RK4Fixed)
        stepper.run_fixed(y, t0, t1, spec, on_step);
    else
        stepper.run_adaptive(y, t0, t1, spec, on_step);
}

} // namespace

Trajectory integrate(const VectorField& rhs, std::span<const double> y0, double t0, double t1,
                     const IntegratorSpec& spec) {
    Trajectory traj(y0.size(), t0, y0);
    State y(y0.begin(), y0.end());
    drive(rhs, y, t0, t1, spec, traj.mutable_stats(),
          [&](double t, const State& ynew, const std::vector<double>& coeffs) {
              traj.push_step(t, ynew, coeffs);
          });
    return traj;
}

State propagate(const VectorField& rhs, std::span<const double> y0, double t0, double t1,
                const IntegratorSpec& spec, StepStats* stats) {
    StepStats local;
    State y(y0.begin(), y0.end());
    drive(rhs, y, t0, t1, spec, stats ? *stats : local,
          [](double, const State&, const std::vector<double>&) {});
    return y;
}

} // namespace avm::numerics
