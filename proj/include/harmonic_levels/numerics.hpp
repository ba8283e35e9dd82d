#pragma once

// Small quadrature and interpolation kernels shared by the reconstruction.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "harmonic_levels/errors.hpp"

namespace harmonic_levels::numerics {

/// Simpson's rule on [a, a+h] from endpoint and midpoint samples.
inline double simpson(double h, double f_a, double f_mid, double f_b) { return h / 6.0 * (f_a + 4.0 * f_mid + f_b); }

/// Value of the cubic Hermite interpolant at the midpoint of an interval of
/// width h with endpoint values f and derivatives df.
inline double hermite_midpoint(double h, double f_a, double df_a, double f_b, double df_b)
{
    return 0.5 * (f_a + f_b) + h * (df_a - df_b) / 8.0;
}

/// Running trapezoid integral of f over the (possibly non-uniform, possibly
/// decreasing) abscissae x, starting at 0 for x[0].
inline std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> f)
{
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t k = 1; k < x.size(); ++k)
        out[k] = out[k - 1] + 0.5 * (x[k] - x[k - 1]) * (f[k] + f[k - 1]);
    return out;
}

/// Piecewise cubic Hermite interpolant over increasing knots.
class HermiteSpline {
public:
    HermiteSpline() = default;
    HermiteSpline(std::vector<double> knots, std::vector<double> values, std::vector<double> slopes)
        : x_(std::move(knots)), f_(std::move(values)), m_(std::move(slopes))
    {
        if (x_.size() < 2 || f_.size() != x_.size() || m_.size() != x_.size())
            throw ConfigError("Hermite spline needs matching knot, value and slope arrays");
    }

    /// Fritsch-Carlson limited version of the given slopes, so that the
    /// interpolant is monotone wherever the data are.
    static HermiteSpline monotone(std::vector<double> knots, std::vector<double> values, std::vector<double> slopes)
    {
        const std::size_t n = knots.size();
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double secant = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
            if (secant == 0.0) {
                slopes[k] = slopes[k + 1] = 0.0;
                continue;
            }
            double alpha = slopes[k] / secant;
            double beta = slopes[k + 1] / secant;
            if (alpha < 0.0)
                slopes[k] = alpha = 0.0;
            if (beta < 0.0)
                slopes[k + 1] = beta = 0.0;
            const double r2 = alpha * alpha + beta * beta;
            if (r2 > 9.0) {
                const double tau = 3.0 / std::sqrt(r2);
                slopes[k] = tau * alpha * secant;
                slopes[k + 1] = tau * beta * secant;
            }
        }
        return HermiteSpline(std::move(knots), std::move(values), std::move(slopes));
    }

    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }
    bool covers(double x) const { return x >= x_.front() && x <= x_.back(); }

    double operator()(double x) const
    {
        if (!covers(x))
            throw OutOfDomainError("interpolation abscissa outside tabulated range");
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        if (x_[k] == x)
            return f_[k];
        if (k + 1 == x_.size())
            return f_.back();
        const double h = x_[k + 1] - x_[k];
        const double s = (x - x_[k]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * f_[k] + h10 * h * m_[k] + h01 * f_[k + 1] + h11 * h * m_[k + 1];
    }

private:
    std::vector<double> x_;
    std::vector<double> f_;
    std::vector<double> m_;
};

} // namespace harmonic_levels::numerics
