#pragma once

// Unit-speed integral curves of the leaf normal N, traced in ambient space
// with classical RK4 and re-inverted to parameter space after every step.

#include <Eigen/Dense>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "harmonic_levels/csv.hpp"
#include "harmonic_levels/errors.hpp"
#include "harmonic_levels/family.hpp"
#include "harmonic_levels/geometry.hpp"

namespace harmonic_levels {

struct FlowPoint {
    double s = 0.0;
    AmbientPoint y;
    ParamPoint q;
};

struct FlowTrace {
    std::vector<FlowPoint> points;
    double step_size = 0.0;
    /// The flow left the parameter box before reaching its target.
    bool truncated = false;
};

struct NormalSample {
    Eigen::VectorXd normal;
    ParamPoint q;
};

inline NormalSample normal_at_ambient(const FamilySpec& spec, const AmbientPoint& y, const ParamPoint& seed)
{
    ParamPoint q = phi_invert(spec, y, seed);
    return {frame_at(spec, q).unit_normal, std::move(q)};
}

namespace detail {

struct FlowState {
    AmbientPoint y;
    ParamPoint q;
};

/// One RK4 step of signed length h on α' = N(α).
inline FlowState rk4_step(const FamilySpec& spec, const FlowState& from, double h)
{
    const Eigen::VectorXd k1 = frame_at(spec, from.q).unit_normal;
    const NormalSample s2 = normal_at_ambient(spec, AmbientPoint(from.y.y + 0.5 * h * k1), from.q);
    const NormalSample s3 = normal_at_ambient(spec, AmbientPoint(from.y.y + 0.5 * h * s2.normal), s2.q);
    const NormalSample s4 = normal_at_ambient(spec, AmbientPoint(from.y.y + h * s3.normal), s3.q);
    AmbientPoint next(from.y.y + (h / 6.0) * (k1 + 2.0 * s2.normal + 2.0 * s3.normal + s4.normal));
    ParamPoint q = phi_invert(spec, next, s4.q);
    return {std::move(next), std::move(q)};
}

} // namespace detail

/// Traces α' = N(α) from Φ(start) for arc length |s_max|; negative s_max
/// flows along -N and records negative s. Stops early, with
/// `truncated = true`, when the trace would leave the parameter box.
inline FlowTrace integrate_normal_flow(const FamilySpec& spec, const ParamPoint& start, double s_max, double step)
{
    if (!(step > 0.0))
        throw ConfigError("flow step must be positive");
    if (!in_domain(spec, start))
        throw OutOfDomainError("flow start " + format_point(start.coords) + " is outside the parameter box");

    FlowTrace trace;
    trace.step_size = step;
    detail::FlowState state{phi_eval(spec, start), start};
    trace.points.push_back({0.0, state.y, state.q});

    const double direction = s_max < 0.0 ? -1.0 : 1.0;
    const double length = std::abs(s_max);
    const auto steps = static_cast<long>(std::ceil(length / step - 1e-9));
    double s = 0.0;
    for (long k = 1; k <= steps; ++k) {
        const double next_s = std::min(static_cast<double>(k) * step, length);
        const double h = direction * (next_s - s);
        detail::FlowState next;
        try {
            next = detail::rk4_step(spec, state, h);
        } catch (const OutOfDomainError&) {
            trace.truncated = true;
            break;
        }
        if (!in_domain(spec, next.q)) {
            trace.truncated = true;
            break;
        }
        s = next_s;
        state = std::move(next);
        trace.points.push_back({direction * s, state.y, state.q});
    }
    return trace;
}

/// Follows the normal flow from `start` until it meets the leaf t = target.
/// The last trace point lies on that leaf to within 1e-13 in t. Throws when
/// the flow leaves the parameter box first.
inline FlowTrace flow_to_leaf(const FamilySpec& spec, const ParamPoint& start, double target, double step)
{
    if (!(step > 0.0))
        throw ConfigError("flow step must be positive");
    if (!in_domain(spec, start))
        throw OutOfDomainError("flow start " + format_point(start.coords) + " is outside the parameter box");
    if (!spec.t_interval().contains(target))
        throw OutOfDomainError("target leaf t = " + csv::number(target) + " is outside t_interval");

    FlowTrace trace;
    trace.step_size = step;
    detail::FlowState state{phi_eval(spec, start), start};
    trace.points.push_back({0.0, state.y, state.q});
    if (state.q.t() == target)
        return trace;

    // dt/ds = 1/φ > 0 along N
    const double direction = target > state.q.t() ? 1.0 : -1.0;
    auto passed = [&](double t) { return direction > 0 ? t >= target : t <= target; };
    double s = 0.0;

    bool reached = false;
    for (long taken = 0; taken < 4'000'000; ++taken) {
        detail::FlowState next;
        try {
            next = detail::rk4_step(spec, state, direction * step);
        } catch (const OutOfDomainError&) {
            throw OutOfDomainError("normal flow left the parameter box before reaching t = " + csv::number(target));
        }
        if (passed(next.q.t())) {
            reached = true;
            break;
        }
        if (!in_domain(spec, next.q))
            throw OutOfDomainError("normal flow left the parameter box before reaching t = " + csv::number(target));
        s += direction * step;
        state = std::move(next);
        trace.points.push_back({s, state.y, state.q});
    }
    if (!reached)
        throw ConvergenceError("normal flow did not reach t = " + csv::number(target));

    // Final partial step: solve t(δ) = target using dt/ds = 1/φ.
    double delta = (target - state.q.t()) * frame_at(spec, state.q).density;
    detail::FlowState last;
    for (int iter = 0; iter < 20; ++iter) {
        last = detail::rk4_step(spec, state, delta);
        const double miss = target - last.q.t();
        if (std::abs(miss) < 1e-13)
            break;
        delta += miss * frame_at(spec, last.q).density;
    }
    trace.points.push_back({s + delta, last.y, last.q});
    return trace;
}

/// 1e-2 x min(1, diameter of the image of the parameter box), the diameter
/// estimated from a 5^n grid of images.
inline double default_flow_step(const FamilySpec& spec)
{
    std::vector<std::vector<double>> axes;
    for (int k = 0; k < spec.ambient_dim(); ++k)
        axes.push_back(axis_nodes(spec.axis(k), 5));
    std::vector<Eigen::VectorXd> images;
    for_each_grid_point(axes, [&](const ParamPoint& q, const auto&) {
        try {
            images.push_back(phi_eval(spec, q).y);
        } catch (const DomainError&) {
        }
    });
    double diameter = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
            diameter = std::max(diameter, (images[i] - images[j]).norm());
    return 1e-2 * std::min(1.0, diameter > 0.0 ? diameter : 1.0);
}

/// ∂φ/∂s by central differences along the straight segment Φ(q) ± h N.
inline double dphi_ds(const FamilySpec& spec, const ParamPoint& q, double h = 1e-4)
{
    const FrameData frame = frame_at(spec, q);
    const Eigen::VectorXd y = phi_eval(spec, q).y;
    const ParamPoint plus = phi_invert(spec, AmbientPoint(y + h * frame.unit_normal), q);
    const ParamPoint minus = phi_invert(spec, AmbientPoint(y - h * frame.unit_normal), q);
    return (frame_at(spec, plus).density - frame_at(spec, minus).density) / (2.0 * h);
}

/// Columns: s, y1..yn, sigma1..sigma(n-1), t.
inline void write_flow_csv(std::ostream& out, const FamilySpec& spec, const FlowTrace& trace)
{
    const int n = spec.ambient_dim();
    std::vector<std::string> columns{"s"};
    for (int i = 1; i <= n; ++i)
        columns.push_back("y" + std::to_string(i));
    for (int i = 1; i < n; ++i)
        columns.push_back("sigma" + std::to_string(i));
    columns.push_back("t");
    csv::header(out, columns);

    std::vector<double> row;
    for (const auto& p : trace.points) {
        row.assign({p.s});
        for (int i = 0; i < n; ++i)
            row.push_back(p.y.y[i]);
        for (int i = 0; i < n; ++i)
            row.push_back(p.q.coords[i]);
        csv::row(out, row);
    }
}

} // namespace harmonic_levels
