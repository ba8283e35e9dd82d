#pragma once

// One-parameter families Φ: R^(n-1) x J -> R^n given by n component
// expressions in the variables s1..s(n-1), t. Evaluation, first and second
// parameter derivatives, and Newton inversion.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "harmonic_levels/errors.hpp"
#include "harmonic_levels/expr.hpp"

#include <json.hpp>

namespace harmonic_levels {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const noexcept { return hi - lo; }
    bool contains(double x, double slack = 0.0) const noexcept
    {
        const double pad = slack * length();
        return x >= lo - pad && x <= hi + pad;
    }
};

enum class DerivativeMode { symbolic, finite_difference };

inline std::string to_string(DerivativeMode mode)
{
    return mode == DerivativeMode::symbolic ? "symbolic" : "finite-difference";
}

/// Numerical knobs shared by everything that touches a family.
struct NumericSettings {
    double newton_tol = 1e-12;
    int max_newton_iters = 50;
    int max_step_halvings = 20;
    double fd_step = 1e-5;        // central differences, first derivatives
    double fd_second_step = 1e-4; // nested central differences
    /// Inverted points may sit this fraction of a box side outside the box
    /// (stencils at box edges); anything further is an out-of-domain error.
    double domain_slack = 0.05;
};

/// Parameter-space point (s1..s(n-1), t). The last coordinate is t.
struct ParamPoint {
    Eigen::VectorXd coords;

    ParamPoint() = default;
    explicit ParamPoint(Eigen::VectorXd c) : coords(std::move(c)) {}
    ParamPoint(std::initializer_list<double> values) : coords(static_cast<Eigen::Index>(values.size()))
    {
        Eigen::Index i = 0;
        for (double v : values)
            coords[i++] = v;
    }

    int dim() const noexcept { return static_cast<int>(coords.size()); }
    double t() const { return coords[coords.size() - 1]; }
    double sigma(int i) const { return coords[i]; }
};

struct AmbientPoint {
    Eigen::VectorXd y;

    AmbientPoint() = default;
    explicit AmbientPoint(Eigen::VectorXd v) : y(std::move(v)) {}
    AmbientPoint(std::initializer_list<double> values) : y(static_cast<Eigen::Index>(values.size()))
    {
        Eigen::Index i = 0;
        for (double v : values)
            y[i++] = v;
    }

    int dim() const noexcept { return static_cast<int>(y.size()); }
};

inline std::string format_point(const Eigen::VectorXd& v)
{
    std::string out = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i)
            out += ", ";
        out += detail::format_number(v[i]);
    }
    return out + ")";
}

/// Symmetric table of ∂²Φ/∂s_i∂s_j for 0 <= i, j < n-1.
class SecondDerivatives {
public:
    explicit SecondDerivatives(int sigma_dim) : m_(sigma_dim), entries_(static_cast<std::size_t>(sigma_dim * (sigma_dim + 1) / 2)) {}

    const Eigen::VectorXd& at(int i, int j) const { return entries_[slot(i, j)]; }
    Eigen::VectorXd& at(int i, int j) { return entries_[slot(i, j)]; }
    int sigma_dim() const noexcept { return m_; }

private:
    std::size_t slot(int i, int j) const
    {
        if (i > j)
            std::swap(i, j);
        return static_cast<std::size_t>(i * m_ - i * (i - 1) / 2 + (j - i));
    }

    int m_;
    std::vector<Eigen::VectorXd> entries_;
};

class FamilySpec {
public:
    /// Parses the component expressions and prepares symbolic derivative
    /// tables. Does not check orientation; see load_family / make_family.
    FamilySpec(std::string name, int ambient_dim, const std::vector<std::string>& component_texts,
               std::vector<Interval> sigma_box, Interval t_interval, DerivativeMode mode = DerivativeMode::symbolic,
               NumericSettings settings = {})
        : name_(std::move(name)), n_(ambient_dim), sigma_box_(std::move(sigma_box)), t_interval_(t_interval),
          mode_(mode), settings(settings)
    {
        if (n_ < 2)
            throw ConfigError("ambient_dim must be >= 2");
        if (static_cast<int>(component_texts.size()) != n_)
            throw ConfigError("expected " + std::to_string(n_) + " components, got " +
                              std::to_string(component_texts.size()));
        if (static_cast<int>(sigma_box_.size()) != n_ - 1)
            throw ConfigError("sigma_box must have " + std::to_string(n_ - 1) + " intervals");
        for (const auto& iv : sigma_box_)
            if (!(iv.lo < iv.hi))
                throw ConfigError("sigma_box interval with lo >= hi");
        if (!(t_interval_.lo < t_interval_.hi))
            throw ConfigError("t_interval with lo >= hi");

        for (int i = 1; i < n_; ++i)
            variables_.push_back("s" + std::to_string(i));
        variables_.push_back("t");

        for (const auto& text : component_texts) {
            if (text.empty())
                throw ConfigError("empty component expression");
            components_.push_back(parse_expression(text, variables_));
        }

        first_.resize(static_cast<std::size_t>(n_ * n_));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                first_[static_cast<std::size_t>(i * n_ + j)] = differentiate(components_[i], variables_[j]);

        const int m = n_ - 1;
        for (int i = 0; i < n_; ++i)
            for (int a = 0; a < m; ++a)
                for (int b = a; b < m; ++b)
                    second_.push_back(differentiate(first_[static_cast<std::size_t>(i * n_ + a)], variables_[b]));
    }

    const std::string& name() const noexcept { return name_; }
    int ambient_dim() const noexcept { return n_; }
    int sigma_dim() const noexcept { return n_ - 1; }
    const std::vector<Expression>& components() const noexcept { return components_; }
    const std::vector<std::string>& variables() const noexcept { return variables_; }
    const std::vector<Interval>& sigma_box() const noexcept { return sigma_box_; }
    const Interval& t_interval() const noexcept { return t_interval_; }
    DerivativeMode derivative_mode() const noexcept { return mode_; }

    /// Interval of parameter axis k (k = n-1 is t).
    const Interval& axis(int k) const { return k == n_ - 1 ? t_interval_ : sigma_box_[static_cast<std::size_t>(k)]; }

    /// ∂y_i/∂(variable j), symbolic.
    const Expression& first_partial(int i, int j) const { return first_[static_cast<std::size_t>(i * n_ + j)]; }

    /// ∂²y_i/∂s_a∂s_b, symbolic.
    const Expression& second_partial(int i, int a, int b) const
    {
        if (a > b)
            std::swap(a, b);
        const int m = n_ - 1;
        const int per_component = m * (m + 1) / 2;
        const int slot = a * m - a * (a - 1) / 2 + (b - a);
        return second_[static_cast<std::size_t>(i * per_component + slot)];
    }

    FamilySpec with_mode(DerivativeMode mode) const
    {
        FamilySpec copy = *this;
        copy.mode_ = mode;
        return copy;
    }

    NumericSettings settings;

private:
    std::string name_;
    int n_;
    std::vector<Expression> components_;
    std::vector<std::string> variables_;
    std::vector<Interval> sigma_box_;
    Interval t_interval_;
    DerivativeMode mode_;
    std::vector<Expression> first_;
    std::vector<Expression> second_;
};

// ---------------------------------------------------------------------------
// Evaluation

inline void require_dim(const FamilySpec& spec, const ParamPoint& q)
{
    if (q.dim() != spec.ambient_dim())
        throw ConfigError("parameter point has " + std::to_string(q.dim()) + " coordinates, expected " +
                          std::to_string(spec.ambient_dim()));
}

inline AmbientPoint phi_eval(const FamilySpec& spec, const ParamPoint& q)
{
    require_dim(spec, q);
    const int n = spec.ambient_dim();
    const std::span<const double> values(q.coords.data(), static_cast<std::size_t>(n));
    AmbientPoint out;
    out.y.resize(n);
    for (int i = 0; i < n; ++i)
        out.y[i] = evaluate(spec.components()[static_cast<std::size_t>(i)], values);
    return out;
}

/// Columns ∂Φ/∂s1 .. ∂Φ/∂s(n-1), ∂Φ/∂t.
inline Eigen::MatrixXd phi_jacobian(const FamilySpec& spec, const ParamPoint& q)
{
    require_dim(spec, q);
    const int n = spec.ambient_dim();
    Eigen::MatrixXd jac(n, n);
    if (spec.derivative_mode() == DerivativeMode::symbolic) {
        const std::span<const double> values(q.coords.data(), static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                jac(i, j) = evaluate(spec.first_partial(i, j), values);
        return jac;
    }
    const double h = spec.settings.fd_step;
    for (int j = 0; j < n; ++j) {
        ParamPoint plus = q, minus = q;
        plus.coords[j] += h;
        minus.coords[j] -= h;
        jac.col(j) = (phi_eval(spec, plus).y - phi_eval(spec, minus).y) / (2.0 * h);
    }
    return jac;
}

inline SecondDerivatives phi_second_derivatives(const FamilySpec& spec, const ParamPoint& q)
{
    require_dim(spec, q);
    const int n = spec.ambient_dim();
    const int m = spec.sigma_dim();
    SecondDerivatives out(m);
    if (spec.derivative_mode() == DerivativeMode::symbolic) {
        const std::span<const double> values(q.coords.data(), static_cast<std::size_t>(n));
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                Eigen::VectorXd v(n);
                for (int i = 0; i < n; ++i)
                    v[i] = evaluate(spec.second_partial(i, a, b), values);
                out.at(a, b) = std::move(v);
            }
        return out;
    }
    const double h = spec.settings.fd_second_step;
    const Eigen::VectorXd center = phi_eval(spec, q).y;
    auto shifted = [&](int a, double da, int b, double db) {
        ParamPoint p = q;
        p.coords[a] += da;
        p.coords[b] += db;
        return phi_eval(spec, p).y;
    };
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            if (a == b) {
                out.at(a, a) = (shifted(a, h, a, 0.0) - 2.0 * center + shifted(a, -h, a, 0.0)) / (h * h);
            } else {
                out.at(a, b) = (shifted(a, h, b, h) - shifted(a, h, b, -h) - shifted(a, -h, b, h) +
                                shifted(a, -h, b, -h)) /
                               (4.0 * h * h);
            }
        }
    return out;
}

/// True when q lies in the parameter box enlarged by `slack` (fraction of
/// each side length).
inline bool in_domain(const FamilySpec& spec, const ParamPoint& q, double slack = 0.0)
{
    for (int k = 0; k < spec.ambient_dim(); ++k)
        if (!spec.axis(k).contains(q.coords[k], slack))
            return false;
    return true;
}

/// Damped Newton iteration on Φ(q) = y starting from `seed`.
inline ParamPoint phi_invert(const FamilySpec& spec, const AmbientPoint& y, const ParamPoint& seed)
{
    require_dim(spec, seed);
    if (y.dim() != spec.ambient_dim())
        throw ConfigError("ambient point has wrong dimension");
    const auto& cfg = spec.settings;

    ParamPoint q = seed;
    Eigen::VectorXd residual = phi_eval(spec, q).y - y.y;
    double norm = residual.norm();

    for (int iter = 0; iter <= cfg.max_newton_iters; ++iter) {
        if (norm < cfg.newton_tol) {
            if (!in_domain(spec, q, cfg.domain_slack))
                throw OutOfDomainError("preimage " + format_point(q.coords) + " of " + format_point(y.y) +
                                       " lies outside the parameter box");
            return q;
        }
        if (iter == cfg.max_newton_iters)
            break;

        const Eigen::MatrixXd jac = phi_jacobian(spec, q);
        double scale = 1.0;
        for (Eigen::Index j = 0; j < jac.cols(); ++j)
            scale *= std::max(jac.col(j).norm(), std::numeric_limits<double>::min());
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14 * scale)
            throw DegenerateError("singular Jacobian at " + format_point(q.coords));
        const Eigen::VectorXd step = lu.solve(-residual);

        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k <= cfg.max_step_halvings; ++k, lambda *= 0.5) {
            ParamPoint trial(q.coords + lambda * step);
            Eigen::VectorXd r;
            try {
                r = phi_eval(spec, trial).y - y.y;
            } catch (const DomainError&) {
                continue;
            }
            const double trial_norm = r.norm();
            if (trial_norm < norm) {
                q = std::move(trial);
                residual = std::move(r);
                norm = trial_norm;
                improved = true;
                break;
            }
        }
        if (!improved)
            throw ConvergenceError("Newton stalled at residual " + detail::format_number(norm) + " inverting " +
                                   format_point(y.y));
    }
    throw ConvergenceError("Newton did not converge after " + std::to_string(cfg.max_newton_iters) +
                           " iterations inverting " + format_point(y.y) + " (residual " +
                           detail::format_number(norm) + ")");
}

// ---------------------------------------------------------------------------
// Grids

/// `count` equally spaced nodes spanning [iv.lo, iv.hi]; endpoints exact.
inline std::vector<double> axis_nodes(const Interval& iv, int count)
{
    std::vector<double> nodes(static_cast<std::size_t>(count));
    if (count == 1) {
        nodes[0] = 0.5 * (iv.lo + iv.hi);
        return nodes;
    }
    for (int k = 0; k < count; ++k)
        nodes[static_cast<std::size_t>(k)] =
            k == count - 1 ? iv.hi : iv.lo + (iv.hi - iv.lo) * static_cast<double>(k) / (count - 1);
    return nodes;
}

/// Visits every node of a tensor grid in lexicographic order with the last
/// axis varying slowest.
template <class Visit>
void for_each_grid_point(const std::vector<std::vector<double>>& axes, Visit&& visit)
{
    const std::size_t dims = axes.size();
    std::vector<std::size_t> idx(dims, 0);
    Eigen::VectorXd coords(static_cast<Eigen::Index>(dims));
    for (;;) {
        for (std::size_t k = 0; k < dims; ++k)
            coords[static_cast<Eigen::Index>(k)] = axes[k][idx[k]];
        visit(ParamPoint(coords), idx);
        std::size_t k = 0;
        while (k < dims && ++idx[k] == axes[k].size()) {
            idx[k] = 0;
            ++k;
        }
        if (k == dims)
            return;
    }
}

/// Grid node whose image is closest to y. Used to seed inversions of
/// arbitrary ambient points.
inline ParamPoint nearest_seed(const FamilySpec& spec, const AmbientPoint& y, int per_axis = 9)
{
    std::vector<std::vector<double>> axes;
    for (int k = 0; k < spec.ambient_dim(); ++k)
        axes.push_back(axis_nodes(spec.axis(k), per_axis));
    ParamPoint best;
    double best_dist = std::numeric_limits<double>::infinity();
    for_each_grid_point(axes, [&](const ParamPoint& q, const auto&) {
        try {
            const double d = (phi_eval(spec, q).y - y.y).norm();
            if (d < best_dist) {
                best_dist = d;
                best = q;
            }
        } catch (const DomainError&) {
        }
    });
    if (!std::isfinite(best_dist))
        throw NumericalError("no evaluable grid node to seed inversion");
    return best;
}

// ---------------------------------------------------------------------------
// Construction and loading

/// Checks det dΦ > 0 on a `per_axis`^n grid over the closed parameter box.
inline void validate_orientation(const FamilySpec& spec, int per_axis = 7)
{
    std::vector<std::vector<double>> axes;
    for (int k = 0; k < spec.ambient_dim(); ++k)
        axes.push_back(axis_nodes(spec.axis(k), per_axis));
    for_each_grid_point(axes, [&](const ParamPoint& q, const auto&) {
        double det = 0.0;
        try {
            det = phi_jacobian(spec, q).determinant();
        } catch (const DomainError& e) {
            throw ConfigError("family '" + spec.name() + "': " + e.what() + " at grid point " +
                              format_point(q.coords));
        }
        if (!(det > 0.0))
            throw ConfigError("family '" + spec.name() + "': orientation failure, det dPhi = " +
                              detail::format_number(det) + " at grid point " + format_point(q.coords));
    });
}

inline FamilySpec make_family(std::string name, int ambient_dim, const std::vector<std::string>& components,
                              std::vector<Interval> sigma_box, Interval t_interval,
                              DerivativeMode mode = DerivativeMode::symbolic)
{
    FamilySpec spec(std::move(name), ambient_dim, components, std::move(sigma_box), t_interval, mode);
    validate_orientation(spec);
    return spec;
}

namespace detail {

inline Interval parse_interval(const nlohmann::json& j, const std::string& what)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(what + " must be a [lo, hi] pair of numbers");
    Interval iv{j[0].get<double>(), j[1].get<double>()};
    if (!(iv.lo < iv.hi))
        throw ConfigError(what + " must satisfy lo < hi");
    return iv;
}

} // namespace detail

/// Builds a family from a config document:
///   {name, ambient_dim, components:[..], sigma_box:[[lo,hi]..], t_interval:[lo,hi],
///    derivative_mode?, grid?, tolerances?, gauge?, notes?}
/// The optional run-level keys are read by the CLI, not here.
inline FamilySpec load_family(const nlohmann::json& doc)
{
    static const char* const known[] = {"name",      "ambient_dim", "components", "sigma_box", "t_interval",
                                        "derivative_mode", "grid",  "tolerances", "gauge",     "notes"};
    if (!doc.is_object())
        throw ConfigError("family config must be a JSON object");
    for (const auto& [key, value] : doc.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known))
            throw ConfigError("unknown config key '" + key + "'");

    for (const char* key : {"name", "ambient_dim", "components", "sigma_box", "t_interval"})
        if (!doc.contains(key))
            throw ConfigError(std::string("missing required key '") + key + "'");

    if (!doc["name"].is_string())
        throw ConfigError("'name' must be a string");
    if (!doc["ambient_dim"].is_number_integer())
        throw ConfigError("'ambient_dim' must be an integer");
    const int n = doc["ambient_dim"].get<int>();
    if (n < 2)
        throw ConfigError("'ambient_dim' must be >= 2");

    const auto& comps = doc["components"];
    if (!comps.is_array())
        throw ConfigError("'components' must be an array of strings");
    if (static_cast<int>(comps.size()) != n)
        throw ConfigError("'components' has " + std::to_string(comps.size()) + " entries but ambient_dim is " +
                          std::to_string(n));
    std::vector<std::string> texts;
    for (const auto& c : comps) {
        if (!c.is_string())
            throw ConfigError("'components' must be an array of strings");
        texts.push_back(c.get<std::string>());
    }

    const auto& box = doc["sigma_box"];
    if (!box.is_array() || static_cast<int>(box.size()) != n - 1)
        throw ConfigError("'sigma_box' must hold " + std::to_string(n - 1) + " intervals");
    std::vector<Interval> sigma_box;
    for (std::size_t i = 0; i < box.size(); ++i)
        sigma_box.push_back(detail::parse_interval(box[i], "sigma_box[" + std::to_string(i) + "]"));
    const Interval t_interval = detail::parse_interval(doc["t_interval"], "t_interval");

    DerivativeMode mode = DerivativeMode::symbolic;
    if (doc.contains("derivative_mode")) {
        const auto& m = doc["derivative_mode"];
        if (m == "symbolic")
            mode = DerivativeMode::symbolic;
        else if (m == "finite-difference")
            mode = DerivativeMode::finite_difference;
        else
            throw ConfigError("'derivative_mode' must be \"symbolic\" or \"finite-difference\"");
    }

    return make_family(doc["name"].get<std::string>(), n, texts, std::move(sigma_box), t_interval, mode);
}

inline nlohmann::json to_json(const FamilySpec& spec)
{
    nlohmann::json doc;
    doc["name"] = spec.name();
    doc["ambient_dim"] = spec.ambient_dim();
    doc["components"] = nlohmann::json::array();
    for (const auto& c : spec.components())
        doc["components"].push_back(to_string(c));
    doc["sigma_box"] = nlohmann::json::array();
    for (const auto& iv : spec.sigma_box())
        doc["sigma_box"].push_back({iv.lo, iv.hi});
    doc["t_interval"] = {spec.t_interval().lo, spec.t_interval().hi};
    doc["derivative_mode"] = to_string(spec.derivative_mode());
    return doc;
}

/// Same family with variable `var` replaced by `replacement` (text in the
/// family's variables) and a new box for the replaced σ-axis. Used to
/// reparametrize leaves.
inline FamilySpec reparametrize(const FamilySpec& spec, const std::string& var, const std::string& replacement,
                                Interval new_axis)
{
    const Expression repl = parse_expression(replacement, spec.variables());
    std::vector<std::string> texts;
    for (const auto& c : spec.components())
        texts.push_back(to_string(substitute(c, var, repl)));
    std::vector<Interval> box = spec.sigma_box();
    const auto pos = std::find(spec.variables().begin(), spec.variables().end(), var);
    if (pos == spec.variables().end() || var == "t")
        throw ConfigError("can only reparametrize a sigma variable");
    box[static_cast<std::size_t>(pos - spec.variables().begin())] = new_axis;
    FamilySpec out(spec.name() + "_reparametrized", spec.ambient_dim(), texts, std::move(box), spec.t_interval(),
                   spec.derivative_mode(), spec.settings);
    validate_orientation(out);
    return out;
}

} // namespace harmonic_levels
