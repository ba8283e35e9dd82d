#pragma once

// Reconstruction of the harmonic function U = u ∘ t of an accepted family.
//
// Two independent routes:
//  * reconstruct_u integrates u''/u' = Λ(t) in t:
//      u'(t) = u'(0) exp(∫_0^t Λ),   u(t) = u(0) + ∫_0^t u'
//  * u_via_line_integral integrates along the normal flow ℓ from Φ(0;0):
//      U(Φ(0;T)) = U(Φ(0;0)) + |∇U(Φ(0;0))| ∫_ℓ exp((n-1) I) ds,  I = ∫ H ds
// and |∇U| = u'(t)/φ everywhere.

#include <Eigen/Dense>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "harmonic_levels/checker.hpp"
#include "harmonic_levels/csv.hpp"
#include "harmonic_levels/errors.hpp"
#include "harmonic_levels/family.hpp"
#include "harmonic_levels/flow.hpp"
#include "harmonic_levels/geometry.hpp"
#include "harmonic_levels/numerics.hpp"

#include <json.hpp>

namespace harmonic_levels {

/// Affine normalisation u(0) = u0, u'(0) = du0 > 0.
struct Gauge {
    double u0 = 0.0;
    double du0 = 1.0;

    void validate() const
    {
        if (!(du0 > 0.0) || !std::isfinite(du0) || !std::isfinite(u0))
            throw ConfigError("gauge requires finite u0 and du0 > 0");
    }
};

class ReconstructionResult {
public:
    ReconstructionResult(std::vector<double> t_grid, std::vector<double> u_values, std::vector<double> du_values,
                         std::vector<double> lambda_of_t, Gauge gauge)
        : t_grid_(std::move(t_grid)), u_(std::move(u_values)), du_(std::move(du_values)),
          lambda_(std::move(lambda_of_t)), gauge_(gauge)
    {
        std::vector<double> du_slopes(du_.size());
        for (std::size_t k = 0; k < du_.size(); ++k)
            du_slopes[k] = lambda_[k] * du_[k];
        u_spline_ = numerics::HermiteSpline::monotone(t_grid_, u_, du_);
        du_spline_ = numerics::HermiteSpline(t_grid_, du_, std::move(du_slopes));
    }

    const std::vector<double>& t_grid() const noexcept { return t_grid_; }
    const std::vector<double>& u_values() const noexcept { return u_; }
    const std::vector<double>& du_values() const noexcept { return du_; }
    const std::vector<double>& lambda_of_t() const noexcept { return lambda_; }
    const Gauge& gauge() const noexcept { return gauge_; }

    /// u(t) by monotone cubic interpolation of the table.
    double u_at(double t) const
    {
        check_range(t);
        return u_spline_(t);
    }

    /// u'(t) by cubic Hermite interpolation with slopes u'' = Λ u'.
    double du_at(double t) const
    {
        check_range(t);
        return du_spline_(t);
    }

private:
    void check_range(double t) const
    {
        if (!(t >= t_grid_.front() && t <= t_grid_.back()))
            throw OutOfDomainError("t = " + csv::number(t) + " is outside the reconstructed range [" +
                                   csv::number(t_grid_.front()) + ", " + csv::number(t_grid_.back()) + "]");
    }

    std::vector<double> t_grid_;
    std::vector<double> u_;
    std::vector<double> du_;
    std::vector<double> lambda_;
    Gauge gauge_;
    numerics::HermiteSpline u_spline_;
    numerics::HermiteSpline du_spline_;
};

/// Leaf-wise mean of Λ over a fixed set of σ points.
class SliceMeanSampler {
public:
    /// Uses the σ-axes of the report grid, thinned to at most `max_per_axis`
    /// evenly spread nodes per axis.
    SliceMeanSampler(const FamilySpec& spec, const CheckReport& report, int max_per_axis = 9, double h = 1e-4)
        : spec_(spec), h_(h)
    {
        std::vector<std::vector<double>> axes;
        for (int k = 0; k < spec.sigma_dim(); ++k) {
            const auto& full = report.axes.at(static_cast<std::size_t>(k));
            const std::size_t count = std::min<std::size_t>(full.size(), static_cast<std::size_t>(max_per_axis));
            std::vector<double> thin;
            for (std::size_t i = 0; i < count; ++i)
                thin.push_back(full[count == 1 ? 0 : (i * (full.size() - 1) + (count - 1) / 2) / (count - 1)]);
            axes.push_back(std::move(thin));
        }
        axes.push_back({0.0});
        for_each_grid_point(axes, [&](const ParamPoint& q, const auto&) { sigma_points_.push_back(q); });
    }

    double operator()(double t) const
    {
        double sum = 0.0;
        for (ParamPoint q : sigma_points_) {
            q.coords[q.coords.size() - 1] = t;
            sum += lambda_at(spec_, q, h_).lambda;
        }
        return sum / static_cast<double>(sigma_points_.size());
    }

private:
    const FamilySpec& spec_;
    double h_;
    std::vector<ParamPoint> sigma_points_;
};

/// Tabulates u and u' on `t_samples` nodes spanning the closed t_interval,
/// with t = 0 as a node. Integrals use Simpson's rule per grid interval.
inline ReconstructionResult reconstruct_u(const FamilySpec& spec, const CheckReport& report, int t_samples,
                                          Gauge gauge)
{
    gauge.validate();
    if (!report.accepted)
        throw RejectedFamilyError("family '" + spec.name() + "' was rejected by the check; no harmonic function");
    if (t_samples < 5 || t_samples % 2 == 0)
        throw ConfigError("t_samples must be odd and >= 5");
    const Interval range = spec.t_interval();
    if (!(range.lo < 0.0 && range.hi > 0.0))
        throw ConfigError("reconstruction requires t = 0 in the interior of t_interval");

    const int intervals = t_samples - 1;
    int left = static_cast<int>(std::lround(intervals * (-range.lo) / range.length()));
    left = std::clamp(left, 1, intervals - 1);
    const int right = intervals - left;

    std::vector<double> t(static_cast<std::size_t>(t_samples));
    for (int k = 0; k < left; ++k)
        t[static_cast<std::size_t>(k)] = range.lo + (-range.lo) * k / left;
    for (int k = 0; k <= right; ++k)
        t[static_cast<std::size_t>(left + k)] = k == right ? range.hi : range.hi * k / right;
    const std::size_t zero = static_cast<std::size_t>(left);

    const SliceMeanSampler slice_mean(spec, report);
    std::vector<double> lambda(t.size()), lambda_mid(t.size() - 1);
    for (std::size_t k = 0; k < t.size(); ++k)
        lambda[k] = slice_mean(t[k]);
    for (std::size_t k = 0; k + 1 < t.size(); ++k)
        lambda_mid[k] = slice_mean(0.5 * (t[k] + t[k + 1]));

    // log(u'/u'(0)) = ∫_0^t Λ
    std::vector<double> log_ratio(t.size(), 0.0);
    for (std::size_t k = zero + 1; k < t.size(); ++k)
        log_ratio[k] = log_ratio[k - 1] +
                       numerics::simpson(t[k] - t[k - 1], lambda[k - 1], lambda_mid[k - 1], lambda[k]);
    for (std::size_t k = zero; k-- > 0;)
        log_ratio[k] = log_ratio[k + 1] - numerics::simpson(t[k + 1] - t[k], lambda[k], lambda_mid[k], lambda[k + 1]);

    std::vector<double> du(t.size());
    for (std::size_t k = 0; k < t.size(); ++k)
        du[k] = gauge.du0 * std::exp(log_ratio[k]);

    auto interval_integral = [&](std::size_t k) {
        const double h = t[k + 1] - t[k];
        const double mid = numerics::hermite_midpoint(h, du[k], lambda[k] * du[k], du[k + 1], lambda[k + 1] * du[k + 1]);
        return numerics::simpson(h, du[k], mid, du[k + 1]);
    };
    std::vector<double> u(t.size(), gauge.u0);
    for (std::size_t k = zero + 1; k < t.size(); ++k)
        u[k] = u[k - 1] + interval_integral(k - 1);
    for (std::size_t k = zero; k-- > 0;)
        u[k] = u[k + 1] - interval_integral(k);

    return ReconstructionResult(std::move(t), std::move(u), std::move(du), std::move(lambda), gauge);
}

/// U(y) = u(t(y)).
inline double evaluate_harmonic(const FamilySpec& spec, const ReconstructionResult& recon, const AmbientPoint& y,
                                const ParamPoint& seed)
{
    return recon.u_at(phi_invert(spec, y, seed).t());
}

/// ‖∇U‖ = u'(t)/φ at a parameter point.
inline double gradient_norm(const FamilySpec& spec, const ReconstructionResult& recon, const ParamPoint& q)
{
    return recon.du_at(q.t()) / frame_at(spec, q).density;
}

inline ParamPoint base_point(const FamilySpec& spec)
{
    ParamPoint q(Eigen::VectorXd::Zero(spec.ambient_dim()));
    if (!in_domain(spec, q))
        throw ConfigError("base point (0;0) is outside the parameter box");
    return q;
}

/// U(Φ(0;T)) from line integrals along the normal flow through Φ(0;0).
inline double u_via_line_integral(const FamilySpec& spec, double T, Gauge gauge, double flow_step = 1e-3)
{
    gauge.validate();
    const ParamPoint start = base_point(spec);
    const FlowTrace trace = flow_to_leaf(spec, start, T, flow_step);
    if (trace.points.size() < 2)
        return gauge.u0;

    std::vector<double> s, curvature;
    for (const auto& p : trace.points) {
        s.push_back(p.s);
        curvature.push_back(mean_curvature_at(spec, p.q));
    }
    const double codim_factor = spec.ambient_dim() - 1;
    const std::vector<double> I = numerics::cumulative_trapezoid(s, curvature);
    std::vector<double> weight(I.size());
    for (std::size_t k = 0; k < I.size(); ++k)
        weight[k] = std::exp(codim_factor * I[k]);
    const double outer = numerics::cumulative_trapezoid(s, weight).back();
    const double grad0 = gauge.du0 / frame_at(spec, start).density;
    return gauge.u0 + grad0 * outer;
}

struct GradientLawRow {
    double s = 0.0;
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_error = 0.0;
};

struct GradientLawReport {
    std::vector<GradientLawRow> rows;
    double max_rel_error = 0.0;
    bool truncated = false;
};

/// Compares ‖∇U(α(s))‖ = u'(t)/φ against ‖∇U(α(0))‖ exp((n-1) ∫_0^s H)
/// along the normal flow from `start`.
inline GradientLawReport verify_gradient_law(const FamilySpec& spec, const ReconstructionResult& recon,
                                             const ParamPoint& start, double s_max, double flow_step = 1e-3)
{
    const FlowTrace trace = integrate_normal_flow(spec, start, s_max, flow_step);
    GradientLawReport report;
    report.truncated = trace.truncated;

    std::vector<double> s, curvature;
    for (const auto& p : trace.points) {
        s.push_back(p.s);
        curvature.push_back(mean_curvature_at(spec, p.q));
    }
    const std::vector<double> I = numerics::cumulative_trapezoid(s, curvature);
    const double codim_factor = spec.ambient_dim() - 1;
    const double lhs0 = gradient_norm(spec, recon, trace.points.front().q);
    for (std::size_t k = 0; k < trace.points.size(); ++k) {
        GradientLawRow row;
        row.s = s[k];
        row.t = trace.points[k].q.t();
        row.lhs = gradient_norm(spec, recon, trace.points[k].q);
        row.rhs = lhs0 * std::exp(codim_factor * I[k]);
        row.rel_error = std::abs(row.lhs - row.rhs) / std::abs(row.rhs);
        report.max_rel_error = std::max(report.max_rel_error, row.rel_error);
        report.rows.push_back(row);
    }
    return report;
}

inline nlohmann::json to_json(const GradientLawReport& report)
{
    nlohmann::json doc;
    doc["max_rel_error"] = report.max_rel_error;
    doc["truncated"] = report.truncated;
    doc["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows)
        doc["rows"].push_back(
            {{"s", r.s}, {"t", r.t}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"rel_error", r.rel_error}});
    return doc;
}

/// Columns: t, u, du.
inline void write_reconstruction_csv(std::ostream& out, const ReconstructionResult& recon)
{
    csv::header(out, {"t", "u", "du"});
    for (std::size_t k = 0; k < recon.t_grid().size(); ++k) {
        const double row[] = {recon.t_grid()[k], recon.u_values()[k], recon.du_values()[k]};
        csv::row(out, row);
    }
}

} // namespace harmonic_levels
