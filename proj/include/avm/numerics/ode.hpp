#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace avm::numerics {

using State = std::vector<double>;

/// Right-hand side y' = f(t, y). Writes f into `dydt`, which has the size of `y`.
using VectorField = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

enum class OdeMethod { RK4Fixed, RK45Adaptive };

struct IntegratorSpec {
    OdeMethod method = OdeMethod::RK45Adaptive;
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    /// Step length for RK4Fixed; starting guess for RK45Adaptive (0 selects automatically).
    double initial_step = 0.0;
    std::size_t max_steps = 5'000'000;

    void validate() const;

    static IntegratorSpec fixed_rk4(double step) {
        IntegratorSpec s;
        s.method = OdeMethod::RK4Fixed;
        s.initial_step = step;
        return s;
    }
    static IntegratorSpec adaptive(double tol) {
        IntegratorSpec s;
        s.abs_tol = tol;
        s.rel_tol = tol;
        return s;
    }
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

/// Dense trajectory: accepted step nodes plus a per-step continuous extension.
///
/// Each step stores five coefficient vectors r1..r5 so that, with s = (t - t_i)/h_i,
///     y(t) = r1 + s (r2 + (1 - s) (r3 + s (r4 + (1 - s) r5))).
/// RK45 steps use the fourth-order Dormand-Prince extension; RK4 steps use cubic
/// Hermite interpolation (r5 = 0).
class Trajectory {
public:
    Trajectory(std::size_t dim, double t0, std::span<const double> y0);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_steps() const noexcept { return times_.size() - 1; }
    double t_begin() const noexcept { return times_.front(); }
    double t_end() const noexcept { return times_.back(); }

    const std::vector<double>& times() const noexcept { return times_; }
    std::span<const double> node(std::size_t i) const;
    State final_state() const;

    /// Continuous extension; t must lie in [t_begin, t_end].
    State at(double t) const;
    void at(double t, std::span<double> out) const;

    const StepStats& stats() const noexcept { return stats_; }

    // Used by the integrator while building the trajectory.
    void push_step(double t_new, std::span<const double> y_new, std::span<const double> coeffs);
    StepStats& mutable_stats() noexcept { return stats_; }

private:
    std::size_t dim_;
    std::vector<double> times_;
    std::vector<double> nodes_;   // (num_steps + 1) * dim
    std::vector<double> coeffs_;  // num_steps * 5 * dim
    StepStats stats_;
};

/// Integrates from t0 to t1 > t0 and keeps the dense output.
Trajectory integrate(const VectorField& rhs, std::span<const double> y0, double t0, double t1,
                     const IntegratorSpec& spec);

/// Same stepping as `integrate` but only returns the end state.
State propagate(const VectorField& rhs, std::span<const double> y0, double t0, double t1,
                const IntegratorSpec& spec, StepStats* stats = nullptr);

} // namespace avm::numerics
