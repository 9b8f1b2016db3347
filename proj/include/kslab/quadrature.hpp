#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "kslab/errors.hpp"

namespace kslab {

/// Adaptive quadrature of f over [a, b] to the requested absolute tolerance,
/// with a relative cap so that large-magnitude integrals terminate at roundoff
/// level. Bisects the worst panel first (15-point Gauss-Kronrod per panel).
template <class F>
double adaptive_integrate(F&& f, double a, double b, double abs_tol,
                          double rel_tol = 1e-13, std::size_t max_panels = 4000) {
    if (!(abs_tol > 0.0)) throw std::invalid_argument("adaptive_integrate: tol must be > 0");
    if (a == b) return 0.0;
    using rule = boost::math::quadrature::gauss_kronrod<double, 15>;

    struct Panel {
        double a, b, value, error;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    auto eval_panel = [&](double lo, double hi) {
        double err = 0.0;
        // max_depth 0 keeps this a single 15-point panel; adaptivity is ours
        double val = rule::integrate(f, lo, hi, 0, 0.0, &err);
        return Panel{lo, hi, val, err};
    };

    std::priority_queue<Panel> heap;
    heap.push(eval_panel(a, b));
    double total = heap.top().value;
    double total_err = heap.top().error;
    while (total_err > abs_tol && total_err > rel_tol * std::abs(total)) {
        if (heap.size() >= max_panels) {
            throw NumericError("adaptive_integrate: no convergence after " +
                               std::to_string(max_panels) + " panels, error " +
                               std::to_string(total_err));
        }
        Panel worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        Panel left = eval_panel(worst.a, mid);
        Panel right = eval_panel(mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    return total;
}

/// Cumulative trapezoid of samples y over nodes x, anchored at 0 at x.front().
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& x,
                                                const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("cumulative_trapezoid: size mismatch");
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return out;
}

/// Least-squares slope of y against x with its standard error.
struct SlopeFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    bool valid = false;
};

inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    SlopeFit fit;
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return fit;
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) return fit;
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - my - fit.slope * (x[i] - mx);
        ss_res += r * r;
    }
    fit.stderr_slope = n > 2 ? std::sqrt(ss_res / double(n - 2) / sxx) : 0.0;
    fit.valid = true;
    return fit;
}

} // namespace kslab
