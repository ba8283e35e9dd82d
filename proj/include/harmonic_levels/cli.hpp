#pragma once

// Command-line front end. Exit codes:
//   0 success / accepted, 2 config or usage error, 3 condition rejected
//   (check only), 4 numerical failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "harmonic_levels/checker.hpp"
#include "harmonic_levels/csv.hpp"
#include "harmonic_levels/errors.hpp"
#include "harmonic_levels/family.hpp"
#include "harmonic_levels/flow.hpp"
#include "harmonic_levels/oracle.hpp"
#include "harmonic_levels/reconstruct.hpp"

#include <json.hpp>

namespace harmonic_levels::cli {

enum ExitCode : int { ok = 0, config_error = 2, rejected = 3, numerical_failure = 4 };

struct Tolerances {
    std::optional<double> check_tol;
    double newton_tol = 1e-12;
    double fd_step = 1e-5;
    std::optional<double> flow_step; // default: default_flow_step(spec)
    int quad_points = 201;
};

struct RunConfig {
    nlohmann::json family_doc;
    std::vector<int> grid;
    Tolerances tolerances;
    Gauge gauge;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const std::string& what)
{
    std::vector<double> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t\r");
        if (first == std::string::npos)
            throw ConfigError("empty entry in " + what);
        item = item.substr(first, last - first + 1);
        double v = 0.0;
        auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc() || res.ptr != item.data() + item.size())
            throw ConfigError("malformed number '" + item + "' in " + what);
        values.push_back(v);
    }
    return values;
}

inline std::vector<int> parse_grid(const std::string& text)
{
    std::vector<int> counts;
    for (double v : parse_list(text, "--grid")) {
        if (v != std::floor(v) || v < 3)
            throw ConfigError("--grid entries must be integers >= 3");
        counts.push_back(static_cast<int>(v));
    }
    return counts;
}

inline nlohmann::json read_config_document(const std::string& source)
{
    static const std::string prefix = "catalog:";
    if (source.rfind(prefix, 0) == 0)
        return find_catalog_entry(source.substr(prefix.size())).config;
    std::ifstream in(source);
    if (!in)
        throw ConfigError("cannot open config '" + source + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + source + "' is not valid JSON: " + e.what());
    }
}

inline double positive(const nlohmann::json& j, const std::string& key)
{
    if (!j.is_number() || !(j.get<double>() > 0.0))
        throw ConfigError("tolerance '" + key + "' must be a positive number");
    return j.get<double>();
}

/// Run-level settings from the config document; flags applied later win.
inline RunConfig run_config_from(nlohmann::json doc)
{
    RunConfig rc;
    if (doc.is_object() && doc.contains("grid")) {
        const auto& g = doc["grid"];
        if (!g.is_array())
            throw ConfigError("'grid' must be an array of per-axis counts");
        for (const auto& c : g) {
            if (!c.is_number_integer() || c.get<int>() < 3)
                throw ConfigError("'grid' entries must be integers >= 3");
            rc.grid.push_back(c.get<int>());
        }
    }
    if (doc.is_object() && doc.contains("tolerances")) {
        const auto& t = doc["tolerances"];
        if (!t.is_object())
            throw ConfigError("'tolerances' must be an object");
        for (const auto& [key, value] : t.items()) {
            if (key == "check_tol")
                rc.tolerances.check_tol = positive(value, key);
            else if (key == "newton_tol")
                rc.tolerances.newton_tol = positive(value, key);
            else if (key == "fd_step")
                rc.tolerances.fd_step = positive(value, key);
            else if (key == "flow_step")
                rc.tolerances.flow_step = positive(value, key);
            else if (key == "quad_points") {
                if (!value.is_number_integer())
                    throw ConfigError("'quad_points' must be an integer");
                rc.tolerances.quad_points = value.get<int>();
            } else
                throw ConfigError("unknown tolerance '" + key + "'");
        }
    }
    if (doc.is_object() && doc.contains("gauge")) {
        const auto& g = doc["gauge"];
        if (!g.is_object() || !g.contains("u0") || !g.contains("du0") || !g["u0"].is_number() ||
            !g["du0"].is_number())
            throw ConfigError("'gauge' must be {\"u0\": number, \"du0\": number}");
        rc.gauge = {g["u0"].get<double>(), g["du0"].get<double>()};
        rc.gauge.validate();
    }
    rc.family_doc = std::move(doc);
    return rc;
}

struct Common {
    std::string config;
    std::string grid;
    std::optional<double> tol;
    std::optional<double> newton_tol;
    std::optional<double> fd_step;
    std::optional<double> flow_step;
    std::optional<int> quad_points;
    std::string gauge;
    std::string out;
};

struct Loaded {
    RunConfig run;
    FamilySpec spec;
};

inline Loaded load(const Common& c)
{
    RunConfig rc = run_config_from(read_config_document(c.config));
    if (!c.grid.empty())
        rc.grid = parse_grid(c.grid);
    if (c.tol)
        rc.tolerances.check_tol = *c.tol;
    if (c.newton_tol)
        rc.tolerances.newton_tol = *c.newton_tol;
    if (c.fd_step)
        rc.tolerances.fd_step = *c.fd_step;
    if (c.flow_step)
        rc.tolerances.flow_step = *c.flow_step;
    if (c.quad_points)
        rc.tolerances.quad_points = *c.quad_points;
    if (!c.gauge.empty()) {
        const auto g = parse_list(c.gauge, "--gauge");
        if (g.size() != 2)
            throw ConfigError("--gauge expects u0,du0");
        rc.gauge = {g[0], g[1]};
        rc.gauge.validate();
    }
    for (double v : {rc.tolerances.newton_tol, rc.tolerances.fd_step, rc.tolerances.flow_step.value_or(1.0)})
        if (!(v > 0.0))
            throw ConfigError("tolerances must be positive");
    if (rc.tolerances.check_tol && !(*rc.tolerances.check_tol > 0.0))
        throw ConfigError("tolerances must be positive");

    FamilySpec spec = load_family(rc.family_doc);
    spec.settings.newton_tol = rc.tolerances.newton_tol;
    spec.settings.fd_step = rc.tolerances.fd_step;
    if (rc.grid.empty())
        rc.grid = default_grid(spec.ambient_dim());
    if (static_cast<int>(rc.grid.size()) != spec.ambient_dim())
        throw ConfigError("grid needs " + std::to_string(spec.ambient_dim()) + " per-axis counts");
    return {std::move(rc), std::move(spec)};
}

inline ParamPoint parse_start(const FamilySpec& spec, const std::string& text)
{
    const auto values = parse_list(text, "--start");
    if (static_cast<int>(values.size()) != spec.ambient_dim())
        throw ConfigError("--start needs " + std::to_string(spec.ambient_dim()) + " values (sigma..., t)");
    ParamPoint q{Eigen::VectorXd(spec.ambient_dim())};
    for (int i = 0; i < spec.ambient_dim(); ++i)
        q.coords[i] = values[static_cast<std::size_t>(i)];
    return q;
}

inline std::vector<AmbientPoint> read_points(const std::string& path, int n)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open points file '" + path + "'");
    std::vector<AmbientPoint> points;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#')
            continue;
        const bool numeric = std::isdigit(static_cast<unsigned char>(line[start])) || line[start] == '-' ||
                             line[start] == '+' || line[start] == '.';
        if (first && !numeric) {
            first = false;
            continue;
        }
        first = false;
        const auto values = parse_list(line, "points file");
        if (static_cast<int>(values.size()) != n)
            throw ConfigError("points file rows need " + std::to_string(n) + " coordinates");
        AmbientPoint p{Eigen::VectorXd(n)};
        for (int i = 0; i < n; ++i)
            p.y[i] = values[static_cast<std::size_t>(i)];
        points.push_back(std::move(p));
    }
    return points;
}

/// Writes to `path`, or to `fallback` when the path is empty.
template <class Write>
void emit(const std::string& path, std::ostream& fallback, Write&& write)
{
    if (path.empty()) {
        write(fallback);
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw ConfigError("cannot write '" + path + "'");
    write(file);
}

} // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Decide whether a family of curves or hypersurfaces is the level-set family of a harmonic function, "
                 "and reconstruct that function."};
    app.require_subcommand(1);

    detail::Common common;
    std::string start_text;
    double length = 0.0;
    std::string points_path;
    std::string catalog_name;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("config", common.config, "family config JSON path, or catalog:<name>")->required();
        sub->add_option("--newton-tol", common.newton_tol, "Newton residual tolerance");
        sub->add_option("--fd-step", common.fd_step, "finite-difference step for derivatives");
    };

    auto* check = app.add_subcommand("check", "test the harmonic-compatibility condition on a grid");
    add_config(check);
    check->add_option("--tol", common.tol, "acceptance tolerance on the normalized slice spread");
    check->add_option("--grid", common.grid, "per-axis sample counts, e.g. 41,21");
    check->add_option("--out", common.out, "write the JSON report here");

    auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct u(t) and optionally evaluate U at points");
    add_config(reconstruct);
    reconstruct->add_option("--tol", common.tol, "acceptance tolerance for the preceding check");
    reconstruct->add_option("--grid", common.grid, "per-axis sample counts for the check");
    reconstruct->add_option("--gauge", common.gauge, "u0,du0 (default 0,1)");
    reconstruct->add_option("--quad-points", common.quad_points, "odd number of t nodes (>= 5)");
    reconstruct->add_option("--points", points_path, "CSV of ambient points at which to evaluate U");
    reconstruct->add_option("--out", common.out, "write the t,u,du table here");

    auto* flow = app.add_subcommand("flow", "trace the unit normal flow and emit it as CSV");
    add_config(flow);
    flow->add_option("--start", start_text, "start parameter point sigma...,t")->required();
    flow->add_option("--length", length, "arc length (negative flows along -N)")->required();
    flow->add_option("--step", common.flow_step, "RK4 step");
    flow->add_option("--out", common.out, "write CSV here instead of stdout");

    auto* verify = app.add_subcommand("verify-gradient", "check the gradient-evolution law along a normal flow");
    add_config(verify);
    verify->add_option("--start", start_text, "start parameter point sigma...,t")->required();
    verify->add_option("--length", length, "arc length")->required();
    verify->add_option("--step", common.flow_step, "RK4 step");
    verify->add_option("--tol", common.tol, "acceptance tolerance for the preceding check");
    verify->add_option("--grid", common.grid, "per-axis sample counts for the check");
    verify->add_option("--gauge", common.gauge, "u0,du0 (default 0,1)");
    verify->add_option("--quad-points", common.quad_points, "odd number of t nodes (>= 5)");
    verify->add_option("--out", common.out, "write the JSON report here instead of stdout");

    auto* sample = app.add_subcommand("sample", "emit the lambda grid as CSV");
    add_config(sample);
    sample->add_option("--grid", common.grid, "per-axis sample counts");
    sample->add_option("--out", common.out, "CSV output path")->required();

    auto* list = app.add_subcommand("catalog", "list bundled families or print one config");
    list->add_option("name", catalog_name, "family to print");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }

    try {
        if (list->parsed()) {
            if (catalog_name.empty()) {
                for (const auto& entry : catalog())
                    out << entry.name << "\t" << entry.notes << "\n";
            } else {
                out << find_catalog_entry(catalog_name).config.dump(2) << "\n";
            }
            return ok;
        }

        auto loaded = detail::load(common);
        const FamilySpec& spec = loaded.spec;
        const RunConfig& rc = loaded.run;
        const double tol = rc.tolerances.check_tol.value_or(default_check_tol(spec.derivative_mode()));

        if (check->parsed()) {
            const CheckReport report = check_family(spec, rc.grid, tol);
            out << "family: " << spec.name() << "\n";
            out << "verdict: " << (report.accepted ? "accepted" : "rejected") << "\n";
            out << "global_residual: " << csv::number(report.global_residual) << "\n";
            out << "tolerance: " << csv::number(tol) << "\n";
            if (report.witness) {
                out << "witness: t=" << csv::number(report.witness->t) << " sigma_min="
                    << format_point(report.witness->at_min.coords.head(spec.sigma_dim()))
                    << " sigma_max=" << format_point(report.witness->at_max.coords.head(spec.sigma_dim()))
                    << " spread=" << csv::number(report.witness->spread) << "\n";
            }
            if (!common.out.empty())
                detail::emit(common.out, out, [&](std::ostream& o) { o << to_json(report).dump(2) << "\n"; });
            return report.accepted ? ok : rejected;
        }

        if (sample->parsed()) {
            const CheckReport report = check_family(spec, rc.grid, tol);
            detail::emit(common.out, out, [&](std::ostream& o) { write_samples_csv(o, spec, report); });
            return ok;
        }

        if (flow->parsed()) {
            const ParamPoint start = detail::parse_start(spec, start_text);
            const FlowTrace trace = integrate_normal_flow(spec, start, length, rc.tolerances.flow_step.value_or(default_flow_step(spec)));
            if (trace.truncated)
                err << "note: flow left the parameter box at s = " << csv::number(trace.points.back().s) << "\n";
            detail::emit(common.out, out, [&](std::ostream& o) { write_flow_csv(o, spec, trace); });
            return ok;
        }

        const CheckReport report = check_family(spec, rc.grid, tol);
        const ReconstructionResult recon = reconstruct_u(spec, report, rc.tolerances.quad_points, rc.gauge);

        if (reconstruct->parsed()) {
            if (!points_path.empty()) {
                const auto points = detail::read_points(points_path, spec.ambient_dim());
                std::vector<std::string> columns;
                for (int i = 1; i <= spec.ambient_dim(); ++i)
                    columns.push_back("y" + std::to_string(i));
                columns.push_back("U");
                csv::header(out, columns);
                for (const auto& p : points) {
                    const ParamPoint seed = nearest_seed(spec, p);
                    std::vector<double> row(p.y.data(), p.y.data() + p.y.size());
                    row.push_back(evaluate_harmonic(spec, recon, p, seed));
                    csv::row(out, row);
                }
                if (!common.out.empty())
                    detail::emit(common.out, out, [&](std::ostream& o) { write_reconstruction_csv(o, recon); });
            } else {
                detail::emit(common.out, out, [&](std::ostream& o) { write_reconstruction_csv(o, recon); });
            }
            return ok;
        }

        // verify-gradient
        const ParamPoint start = detail::parse_start(spec, start_text);
        const GradientLawReport law = verify_gradient_law(spec, recon, start, length, rc.tolerances.flow_step.value_or(default_flow_step(spec)));
        detail::emit(common.out, out, [&](std::ostream& o) { o << to_json(law).dump(2) << "\n"; });
        return ok;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.category() == Error::Category::config ? config_error : numerical_failure;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return numerical_failure;
    }
}

} // namespace harmonic_levels::cli
