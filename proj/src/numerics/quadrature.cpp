#include "avm/numerics/quadrature.hpp"

#include "avm/error.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <vector>

namespace avm::numerics {

void QuadratureSpec::validate() const {
    if (!(abs_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "quadrature abs_tol must be positive");
    if (max_subdivisions < 1)
        throw Error(ErrorKind::InvalidArgument, "quadrature max_subdivisions must be >= 1");
    if (method == QuadratureMethod::GaussLegendreComposite && panels < 1)
        throw Error(ErrorKind::InvalidArgument, "Gauss-Legendre panel count must be >= 1");
}

namespace {

double checked(const ScalarFunction& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "integrand is not finite");
    return v;
}

struct Panel {
    double a, b;
    double fa, fm, fb;
    double whole;
    double tol;
    int depth;
};

// Start from a uniform partition deep enough that symmetric sampling
// coincidences (e.g. sin on a full period) cannot fake convergence.
constexpr int kInitialPanels = 16;
constexpr int kMinDepth = 2;

double adaptive_simpson(const ScalarFunction& f, double a, double b, const QuadratureSpec& spec) {
    std::vector<Panel> stack;
    const double width = (b - a) / kInitialPanels;
    for (int i = kInitialPanels - 1; i >= 0; --i) {
        const double pa = a + i * width;
        const double pb = (i + 1 == kInitialPanels) ? b : a + (i + 1) * width;
        const double fa = checked(f, pa), fb = checked(f, pb), fm = checked(f, 0.5 * (pa + pb));
        stack.push_back({pa, pb, fa, fm, fb, (pb - pa) / 6.0 * (fa + 4.0 * fm + fb),
                         spec.abs_tol / kInitialPanels, 0});
    }

    std::size_t panels = kInitialPanels;
    double total = 0.0;
    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        const double m = 0.5 * (p.a + p.b);
        const double lm = 0.5 * (p.a + m), rm = 0.5 * (m + p.b);
        const double flm = checked(f, lm), frm = checked(f, rm);
        const double left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        const double right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        const double diff = left + right - p.whole;
        if ((p.depth >= kMinDepth && std::abs(diff) <= 15.0 * p.tol) || m <= p.a || m >= p.b) {
            total += left + right + diff / 15.0;
            continue;
        }
        if (++panels > spec.max_subdivisions)
            throw Error(ErrorKind::QuadratureBudget, "adaptive Simpson exhausted its panel budget");
        stack.push_back({m, p.b, p.fm, frm, p.fb, right, 0.5 * p.tol, p.depth + 1});
        stack.push_back({p.a, m, p.fa, flm, p.fm, left, 0.5 * p.tol, p.depth + 1});
    }
    return total;
}

double gauss_legendre(const ScalarFunction& f, double a, double b, std::size_t panels) {
    using rule = boost::math::quadrature::gauss<double, 10>;
    const double width = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double pa = a + static_cast<double>(i) * width;
        const double pb = (i + 1 == panels) ? b : pa + width;
        total += rule::integrate([&](double x) { return checked(f, x); }, pa, pb);
    }
    return total;
}

} // namespace

double quad(const ScalarFunction& f, double a, double b, const QuadratureSpec& spec) {
    spec.validate();
    if (!std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorKind::InvalidArgument, "quadrature limits must be finite");
    if (a == b) return 0.0;
    if (a > b) return -quad(f, b, a, spec);
    if (spec.method == QuadratureMethod::GaussLegendreComposite)
        return gauss_legendre(f, a, b, spec.panels);
    return adaptive_simpson(f, a, b, spec);
}

} // namespace avm::numerics
