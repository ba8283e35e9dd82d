#pragma once

// Harmonic-compatibility test for a family: sample
//   Λ = ∂φ/∂s + (n-1) H φ
// on a parameter grid and accept iff Λ is constant on every sampled leaf.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "harmonic_levels/csv.hpp"
#include "harmonic_levels/errors.hpp"
#include "harmonic_levels/family.hpp"
#include "harmonic_levels/flow.hpp"
#include "harmonic_levels/geometry.hpp"

#include <json.hpp>

namespace harmonic_levels {

struct ConditionSample {
    ParamPoint q;
    double phi = 0.0;
    /// Mean curvature H (signed curvature κ when n = 2).
    double curvature = 0.0;
    double dphi_ds = 0.0;
    /// (n-1) H φ
    double curvature_term = 0.0;
    double lambda = 0.0;
};

inline ConditionSample lambda_at(const FamilySpec& spec, const ParamPoint& q, double h = 1e-4)
{
    ConditionSample out;
    out.q = q;
    const FrameData frame = frame_at(spec, q);
    out.phi = frame.density;
    out.curvature = mean_curvature_from_frame(frame, phi_second_derivatives(spec, q));
    out.dphi_ds = dphi_ds(spec, q, h);
    out.curvature_term = (spec.ambient_dim() - 1) * out.curvature * out.phi;
    out.lambda = out.dphi_ds + out.curvature_term;
    return out;
}

struct SliceSummary {
    double t = 0.0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double spread = 0.0;
    ParamPoint at_min;
    ParamPoint at_max;
};

struct Witness {
    double t = 0.0;
    ParamPoint at_min;
    ParamPoint at_max;
    double spread = 0.0;
};

struct CheckReport {
    std::string family;
    DerivativeMode mode = DerivativeMode::symbolic;
    /// Per-axis counts, σ-axes first, t last.
    std::vector<int> grid;
    std::vector<std::vector<double>> axes;
    /// Grid order: first σ-axis fastest, t slowest.
    std::vector<ConditionSample> samples;
    std::vector<SliceSummary> slices;
    double median_abs_lambda = 0.0;
    double global_residual = 0.0;
    double tolerance = 0.0;
    bool accepted = false;
    std::optional<Witness> witness;
};

inline double default_check_tol(DerivativeMode mode) { return mode == DerivativeMode::symbolic ? 1e-6 : 1e-4; }

inline std::vector<int> default_grid(int ambient_dim)
{
    if (ambient_dim == 2)
        return {41, 21};
    if (ambient_dim == 3)
        return {21, 21, 11};
    return std::vector<int>(static_cast<std::size_t>(ambient_dim), 7);
}

/// Fraction of t_interval kept clear at both ends so that sampled leaves
/// are interior to the open interval J.
inline constexpr double t_margin_fraction = 1e-3;

inline Interval interior_t_range(const FamilySpec& spec)
{
    const Interval& t = spec.t_interval();
    const double margin = t_margin_fraction * t.length();
    return {t.lo + margin, t.hi - margin};
}

/// Grid axes: σ-axes span the closed box, the t-axis spans interior_t_range.
inline std::vector<std::vector<double>> check_axes(const FamilySpec& spec, const std::vector<int>& counts)
{
    if (static_cast<int>(counts.size()) != spec.ambient_dim())
        throw ConfigError("grid needs " + std::to_string(spec.ambient_dim()) + " per-axis counts");
    for (int c : counts)
        if (c < 3)
            throw ConfigError("grid needs at least 3 points per axis");
    std::vector<std::vector<double>> axes;
    for (int k = 0; k < spec.sigma_dim(); ++k)
        axes.push_back(axis_nodes(spec.sigma_box()[static_cast<std::size_t>(k)], counts[static_cast<std::size_t>(k)]));
    axes.push_back(axis_nodes(interior_t_range(spec), counts.back()));
    return axes;
}

namespace detail {
inline double median(std::vector<double> values)
{
    if (values.empty())
        return 0.0;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double m = values[mid];
    if (values.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}
} // namespace detail

/// Samples Λ over the grid; verdict accepted iff
///   max_slice (max Λ - min Λ) / max(1, median |Λ|) < tol.
inline CheckReport check_family(const FamilySpec& spec, const std::vector<int>& counts, double tol, double h = 1e-4)
{
    if (!(tol > 0.0))
        throw ConfigError("tolerance must be positive");
    CheckReport report;
    report.family = spec.name();
    report.mode = spec.derivative_mode();
    report.grid = counts;
    report.axes = check_axes(spec, counts);
    report.tolerance = tol;

    for_each_grid_point(report.axes, [&](const ParamPoint& q, const auto&) {
        try {
            report.samples.push_back(lambda_at(spec, q, h));
        } catch (const Error& e) {
            throw NumericalError(std::string(e.what()) + " (sampling at " + format_point(q.coords) + ")");
        }
    });

    std::vector<double> abs_values;
    for (const auto& s : report.samples)
        abs_values.push_back(std::abs(s.lambda));
    report.median_abs_lambda = detail::median(abs_values);
    const double scale = std::max(1.0, report.median_abs_lambda);

    const std::size_t per_slice = report.samples.size() / report.axes.back().size();
    double worst = -1.0;
    for (std::size_t k = 0; k < report.axes.back().size(); ++k) {
        SliceSummary slice;
        slice.t = report.axes.back()[k];
        const auto first = report.samples.begin() + static_cast<std::ptrdiff_t>(k * per_slice);
        double sum = 0.0;
        auto lo = first, hi = first;
        for (auto it = first; it != first + static_cast<std::ptrdiff_t>(per_slice); ++it) {
            sum += it->lambda;
            if (it->lambda < lo->lambda)
                lo = it;
            if (it->lambda > hi->lambda)
                hi = it;
        }
        slice.mean = sum / static_cast<double>(per_slice);
        slice.min = lo->lambda;
        slice.max = hi->lambda;
        slice.spread = slice.max - slice.min;
        slice.at_min = lo->q;
        slice.at_max = hi->q;
        if (slice.spread > worst) {
            worst = slice.spread;
            report.witness = Witness{slice.t, slice.at_min, slice.at_max, slice.spread};
        }
        report.slices.push_back(std::move(slice));
    }
    report.global_residual = worst / scale;
    report.accepted = report.global_residual < tol;
    if (report.accepted)
        report.witness.reset();
    return report;
}

inline nlohmann::json to_json(const CheckReport& report)
{
    nlohmann::json doc;
    doc["family"] = report.family;
    doc["derivative_mode"] = to_string(report.mode);
    doc["grid"] = report.grid;
    doc["tolerance"] = report.tolerance;
    doc["global_residual"] = report.global_residual;
    doc["median_abs_lambda"] = report.median_abs_lambda;
    doc["verdict"] = report.accepted ? "accepted" : "rejected";
    doc["slices"] = nlohmann::json::array();
    for (const auto& s : report.slices)
        doc["slices"].push_back({{"t", s.t}, {"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"spread", s.spread}});
    if (report.witness) {
        const auto& w = *report.witness;
        auto sigma = [](const ParamPoint& q) {
            std::vector<double> v(q.coords.data(), q.coords.data() + q.coords.size() - 1);
            return v;
        };
        doc["witness"] = {{"t", w.t}, {"sigma_min", sigma(w.at_min)}, {"sigma_max", sigma(w.at_max)},
                          {"spread", w.spread}};
    } else {
        doc["witness"] = nullptr;
    }
    return doc;
}

/// Columns: sigma1.., t, phi, kappa (n = 2) or H, dphi_ds, lambda.
inline void write_samples_csv(std::ostream& out, const FamilySpec& spec, const CheckReport& report)
{
    const int n = spec.ambient_dim();
    std::vector<std::string> columns;
    for (int i = 1; i < n; ++i)
        columns.push_back("sigma" + std::to_string(i));
    columns.insert(columns.end(), {"t", "phi", n == 2 ? "kappa" : "H", "dphi_ds", "lambda"});
    csv::header(out, columns);
    std::vector<double> row;
    for (const auto& s : report.samples) {
        row.assign(s.q.coords.data(), s.q.coords.data() + s.q.coords.size());
        row.insert(row.end(), {s.phi, s.curvature, s.dphi_ds, s.lambda});
        csv::row(out, row);
    }
}

} // namespace harmonic_levels
