#pragma once

// Function-side computations used to cross-check the family-side pipeline:
// derivatives of explicit scalar functions f(y1..yn), the curvature of
// their level sets, finite-difference Laplacians, affine matching, and the
// bundled reference catalog.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "harmonic_levels/errors.hpp"
#include "harmonic_levels/expr.hpp"
#include "harmonic_levels/family.hpp"

#include <json.hpp>

namespace harmonic_levels {

enum class LaplacianMode { symbolic, fd };

inline std::vector<std::string> ambient_variables(int n)
{
    std::vector<std::string> vars;
    for (int i = 1; i <= n; ++i)
        vars.push_back("y" + std::to_string(i));
    return vars;
}

/// Parses f in the ambient variables y1..yn.
inline Expression parse_ambient_function(const std::string& text, int n)
{
    const auto vars = ambient_variables(n);
    return parse_expression(text, vars);
}

inline Eigen::VectorXd gradient_of_scalar(const Expression& f, const AmbientPoint& p)
{
    const int n = p.dim();
    const auto vars = ambient_variables(n);
    const std::span<const double> values(p.y.data(), static_cast<std::size_t>(n));
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i)
        g[i] = evaluate(differentiate(f, vars[static_cast<std::size_t>(i)]), values);
    return g;
}

inline Eigen::MatrixXd hessian_of_scalar(const Expression& f, const AmbientPoint& p)
{
    const int n = p.dim();
    const auto vars = ambient_variables(n);
    const std::span<const double> values(p.y.data(), static_cast<std::size_t>(n));
    Eigen::MatrixXd hess(n, n);
    for (int i = 0; i < n; ++i) {
        const Expression fi = differentiate(f, vars[static_cast<std::size_t>(i)]);
        for (int j = i; j < n; ++j)
            hess(i, j) = hess(j, i) = evaluate(differentiate(fi, vars[static_cast<std::size_t>(j)]), values);
    }
    return hess;
}

/// Central-difference Laplacian of any callable R^n -> R.
template <class F>
double fd_laplacian(F&& f, const Eigen::VectorXd& p, double h = 1e-3)
{
    const double center = f(p);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        Eigen::VectorXd plus = p, minus = p;
        plus[i] += h;
        minus[i] -= h;
        sum += (f(plus) - 2.0 * center + f(minus)) / (h * h);
    }
    return sum;
}

template <class F>
Eigen::VectorXd fd_gradient(F&& f, const Eigen::VectorXd& p, double h = 1e-5)
{
    Eigen::VectorXd g(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        Eigen::VectorXd plus = p, minus = p;
        plus[i] += h;
        minus[i] -= h;
        g[i] = (f(plus) - f(minus)) / (2.0 * h);
    }
    return g;
}

inline double laplacian_of_scalar(const Expression& f, const AmbientPoint& p,
                                  LaplacianMode mode = LaplacianMode::symbolic, double h = 1e-3)
{
    if (mode == LaplacianMode::symbolic)
        return hessian_of_scalar(f, p).trace();
    return fd_laplacian(
        [&](const Eigen::VectorXd& y) {
            return evaluate(f, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
        },
        p.y, h);
}

namespace detail {
inline Eigen::VectorXd checked_gradient(const Expression& f, const AmbientPoint& p)
{
    Eigen::VectorXd g = gradient_of_scalar(f, p);
    if (!(g.norm() >= 1e-12))
        throw DegenerateError("critical point of f at " + format_point(p.y));
    return g;
}
} // namespace detail

/// κ = -D_T² f / D_N f with N = ∇f/|∇f| and T the -90° rotation of N.
inline double level_curvature_from_function(const Expression& f, const AmbientPoint& p)
{
    if (p.dim() != 2)
        throw ConfigError("level curvature requires a planar point");
    const Eigen::VectorXd g = detail::checked_gradient(f, p);
    const Eigen::Vector2d normal = g / g.norm();
    const Eigen::Vector2d tangent(normal[1], -normal[0]);
    const Eigen::MatrixXd hess = hessian_of_scalar(f, p);
    return -tangent.dot(hess * tangent) / g.norm();
}

/// H = (D_N² f - Δf) / ((n-1) D_N f).
inline double mean_curvature_from_function(const Expression& f, const AmbientPoint& p)
{
    const Eigen::VectorXd g = detail::checked_gradient(f, p);
    const Eigen::VectorXd normal = g / g.norm();
    const Eigen::MatrixXd hess = hessian_of_scalar(f, p);
    return (normal.dot(hess * normal) - hess.trace()) / ((p.dim() - 1) * g.norm());
}

struct AffineFit {
    double a = 0.0;
    double b = 0.0;
    double max_abs_err = 0.0;
};

/// Least-squares fit ref ≈ a·rec + b.
inline AffineFit affine_match(std::span<const double> rec, std::span<const double> ref)
{
    if (rec.size() != ref.size() || rec.size() < 3)
        throw ConfigError("affine_match needs at least 3 paired samples");
    const double count = static_cast<double>(rec.size());
    double mean_rec = 0.0, mean_ref = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        mean_rec += rec[i];
        mean_ref += ref[i];
    }
    mean_rec /= count;
    mean_ref /= count;
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        cov += (rec[i] - mean_rec) * (ref[i] - mean_ref);
        var += (rec[i] - mean_rec) * (rec[i] - mean_rec);
    }
    if (!(var > 1e-300) || var <= 1e-24 * (mean_rec * mean_rec + 1.0) * count)
        throw DegenerateError("affine_match: reconstructed samples are constant");
    AffineFit fit;
    fit.a = cov / var;
    fit.b = mean_ref - fit.a * mean_rec;
    for (std::size_t i = 0; i < rec.size(); ++i)
        fit.max_abs_err = std::max(fit.max_abs_err, std::abs(fit.a * rec[i] + fit.b - ref[i]));
    return fit;
}

// ---------------------------------------------------------------------------
// Catalog

struct ReferenceEntry {
    std::string name;
    nlohmann::json config;
    /// Harmonic function with this level-set family; absent for counterexamples.
    std::optional<std::string> reference_function;
    /// Some function whose level sets are the leaves and whose gradient
    /// points along N. Equals the reference function when one exists.
    std::string level_function;
    std::string notes;

    FamilySpec family() const { return load_family(config); }
    int ambient_dim() const { return config.at("ambient_dim").get<int>(); }
    std::optional<Expression> reference() const
    {
        if (!reference_function)
            return std::nullopt;
        return parse_ambient_function(*reference_function, ambient_dim());
    }
    Expression level() const { return parse_ambient_function(level_function, ambient_dim()); }
};

inline const std::vector<ReferenceEntry>& catalog()
{
    using nlohmann::json;
    static const std::vector<ReferenceEntry> entries = [] {
        std::vector<ReferenceEntry> out;
        auto add = [&](std::string name, int n, std::vector<std::string> components, json sigma_box,
                       json t_interval, std::optional<std::string> reference, std::string level, std::string notes) {
            json config = {{"name", name},
                           {"ambient_dim", n},
                           {"components", components},
                           {"sigma_box", sigma_box},
                           {"t_interval", t_interval},
                           {"derivative_mode", "symbolic"},
                           {"notes", notes}};
            out.push_back({std::move(name), std::move(config), std::move(reference), std::move(level),
                           std::move(notes)});
        };
        add("parallel_lines", 2, {"s1", "t"}, json::array({json::array({-1.0, 1.0})}), json::array({-1.0, 1.0}), "y2",
            "y2", "U = y2; lambda = 0");
        add("concentric_circles", 2, {"exp(t)*cos(s1)", "-exp(t)*sin(s1)"}, json::array({json::array({-3.0, 3.0})}),
            json::array({-0.5, 1.0}), "log(sqrt(y1^2+y2^2))", "log(sqrt(y1^2+y2^2))", "U = log r; lambda = 0");
        add("hyperbolas", 2, {"exp(s1)", "t*exp(-s1)"}, json::array({json::array({-1.0, 1.0})}),
            json::array({-1.0, 1.0}), "y1*y2", "y1*y2", "U = y1*y2 on y1 > 0; lambda = 0");
        add("spheres_chart", 3,
            {"exp(t)*2*s2/(1+s1^2+s2^2)", "exp(t)*2*s1/(1+s1^2+s2^2)", "exp(t)*(s1^2+s2^2-1)/(1+s1^2+s2^2)"},
            json::array({json::array({-1.0, 1.0}), json::array({-1.0, 1.0})}), json::array({-0.5, 0.5}),
            "-1/sqrt(y1^2+y2^2+y3^2)", "-1/sqrt(y1^2+y2^2+y3^2)",
            "inverse-stereographic chart scaled by exp(t); U affine to -1/r; lambda = -1");
        add("parabolas_counterexample", 2, {"s1", "t+s1^2"}, json::array({json::array({0.0, 1.0})}),
            json::array({-1.0, 1.0}), std::nullopt, "y2-y1^2",
            "no harmonic function; lambda = 2/(1+4*s1^2)");
        return out;
    }();
    return entries;
}

inline const ReferenceEntry& find_catalog_entry(const std::string& name)
{
    for (const auto& e : catalog())
        if (e.name == name)
            return e;
    throw ConfigError("no catalog family named '" + name + "'");
}

} // namespace harmonic_levels
