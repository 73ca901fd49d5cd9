#pragma once

#include <cstddef>
#include <functional>

namespace avm::numerics {

enum class QuadratureMethod { AdaptiveSimpson, GaussLegendreComposite };

struct QuadratureSpec {
    QuadratureMethod method = QuadratureMethod::AdaptiveSimpson;
    double abs_tol = 1e-10;
    /// Panel budget for adaptive Simpson.
    std::size_t max_subdivisions = std::size_t{1} << 20;
    /// Number of equal panels for the composite Gauss-Legendre rule (10 nodes per panel).
    std::size_t panels = 64;

    void validate() const;

    static QuadratureSpec gauss_legendre(std::size_t panels) {
        QuadratureSpec s;
        s.method = QuadratureMethod::GaussLegendreComposite;
        s.panels = panels;
        return s;
    }
};

using ScalarFunction = std::function<double(double)>;

/// Integral of f over [a, b]; a > b flips the sign.
double quad(const ScalarFunction& f, double a, double b, const QuadratureSpec& spec);

} // namespace avm::numerics
