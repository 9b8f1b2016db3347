#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kslab {

/// Cubic Hermite interpolant on uniformly spaced knots with caller-supplied
/// nodal derivatives. Optionally clamps derivatives Fritsch-Carlson style so
/// that monotone data yields a monotone interpolant.
class HermiteTable {
public:
    HermiteTable() = default;

    HermiteTable(double x0, double dx, std::vector<double> y, std::vector<double> dy,
                 bool monotone_clamp)
        : x0_(x0), dx_(dx), y_(std::move(y)), dy_(std::move(dy)) {
        if (y_.size() < 2 || y_.size() != dy_.size())
            throw std::invalid_argument("HermiteTable: need matching y/dy, size >= 2");
        if (!(dx_ > 0.0)) throw std::invalid_argument("HermiteTable: dx must be > 0");
        if (monotone_clamp) clamp_derivatives();
    }

    double x_min() const { return x0_; }
    double x_max() const { return x0_ + dx_ * double(y_.size() - 1); }
    bool covers(double x) const { return x >= x_min() && x <= x_max(); }

    double eval(double x) const {
        double s = (x - x0_) / dx_;
        auto j = static_cast<std::ptrdiff_t>(std::floor(s));
        const auto last = static_cast<std::ptrdiff_t>(y_.size()) - 2;
        if (j < 0) j = 0;
        if (j > last) j = last;
        const double t = s - double(j);
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        const double h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t);
        const double h11 = t * t * (t - 1);
        return h00 * y_[j] + h10 * dx_ * dy_[j] + h01 * y_[j + 1] + h11 * dx_ * dy_[j + 1];
    }

private:
    // Limits nodal slopes against secant slopes so monotone data cannot
    // produce interpolation overshoot.
    void clamp_derivatives() {
        const std::size_t n = y_.size();
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double secant = (y_[j + 1] - y_[j]) / dx_;
            if (secant == 0.0) {
                dy_[j] = 0.0;
                dy_[j + 1] = 0.0;
                continue;
            }
            for (std::size_t k : {j, j + 1}) {
                const double ratio = dy_[k] / secant;
                if (ratio < 0.0)
                    dy_[k] = 0.0;
                else if (ratio > 3.0)
                    dy_[k] = 3.0 * secant;
            }
        }
    }

    double x0_ = 0.0;
    double dx_ = 1.0;
    std::vector<double> y_, dy_;
};

} // namespace kslab
