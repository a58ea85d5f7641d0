#include "shefk/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "shefk/kernels.hpp"
#include "shefk/parallel.hpp"
#include "shefk/paths.hpp"
#include "shefk/pde.hpp"
#include "shefk/solver.hpp"
#include "shefk/validate.hpp"
#include "shefk/wick.hpp"

#ifndef SHEFK_VERSION
#define SHEFK_VERSION "unknown"
#endif

namespace shefk::cli {

namespace {

using json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { real, integer, unsigned_integer, text, flag };

struct Key {
    const char* name;  // config-file spelling; the flag is "--" + name with '_' -> '-'
    Kind kind;
    json fallback;
    const char* help;
    bool in_config = true;  // false: affects where output goes, not what is computed
};

const std::vector<Key>& keys() {
    static const std::vector<Key> all{
        {"command", Kind::text, "", "subcommand"},
        {"t", Kind::real, 1.0, "evaluation time"},
        {"x", Kind::real, 0.0, "evaluation point"},
        {"k", Kind::integer, 50, "noise truncation K"},
        {"paths", Kind::unsigned_integer, 10000u, "Brownian paths per estimate"},
        {"samples", Kind::unsigned_integer, 1000u, "noise draws"},
        {"dt", Kind::real, 1e-3, "path time step"},
        {"bins", Kind::real, 0.02, "local-time bin width"},
        {"degree", Kind::integer, 2, "chaos degree N"},
        {"seed", Kind::unsigned_integer, 1u, "master seed"},
        {"u0", Kind::text, "one", "initial condition name"},
        {"draw", Kind::unsigned_integer, 0u, "noise draw index for single-draw runs"},
        {"k_list", Kind::text, "25,50,100,200", "comma-separated K values"},
        {"q", Kind::integer, 2, "moment order"},
        {"quick", Kind::flag, false, "reduced validation sizes"},
        {"xi", Kind::text, "0.5", "comma-separated test-function coefficients"},
        {"x_half", Kind::real, 6.0, "PDE x half-width"},
        {"z_half", Kind::real, 6.0, "PDE z half-width"},
        {"h_x", Kind::real, 0.1, "PDE x step"},
        {"h_z", Kind::real, 0.05, "PDE z step"},
        {"dt_pde", Kind::real, 0.0, "PDE time step (0 = largest stable)"},
        {"time_nodes", Kind::unsigned_integer, 12u, "mild-check time nodes"},
        {"space_nodes", Kind::unsigned_integer, 41u, "mild-check space nodes"},
        {"half_width", Kind::real, 5.0, "mild-check space half-width"},
        {"threads", Kind::unsigned_integer, 0u, "worker threads (0 = all cores)", false},
        {"out", Kind::text, "", "output file", false},
        {"format", Kind::text, "csv", "csv or json", false},
        {"field_out", Kind::text, "", "pde-check: write the PDE field CSV here", false},
    };
    return all;
}

const Key* find_key(const std::string& name) {
    for (const auto& k : keys()) {
        if (name == k.name) return &k;
    }
    return nullptr;
}

std::string flag_name(const char* name) {
    std::string s = std::string("--") + name;
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

json parse_value(const Key& key, const std::string& text) {
    const std::string where = "invalid value for '" + std::string(key.name) + "': " + text;
    std::size_t used = 0;
    try {
        switch (key.kind) {
            case Kind::real: {
                const double v = std::stod(text, &used);
                if (used != text.size() || !std::isfinite(v)) throw ConfigError(where);
                return v;
            }
            case Kind::integer: {
                const long long v = std::stoll(text, &used);
                if (used != text.size()) throw ConfigError(where);
                return v;
            }
            case Kind::unsigned_integer: {
                if (text.empty() || text[0] == '-') throw ConfigError(where);
                const unsigned long long v = std::stoull(text, &used);
                if (used != text.size()) throw ConfigError(where);
                return static_cast<std::uint64_t>(v);
            }
            case Kind::flag:
                if (text == "true" || text == "1") return true;
                if (text == "false" || text == "0") return false;
                throw ConfigError(where);
            case Kind::text:
                return text;
        }
    } catch (const std::logic_error&) {
        throw ConfigError(where);
    }
    throw ConfigError(where);
}

json check_json_value(const Key& key, const json& v) {
    const std::string where = "wrong type for '" + std::string(key.name) + "'";
    switch (key.kind) {
        case Kind::real:
            if (!v.is_number()) throw ConfigError(where);
            return v.get<double>();
        case Kind::integer:
            if (!v.is_number_integer()) throw ConfigError(where);
            return v.get<long long>();
        case Kind::unsigned_integer:
            if (!v.is_number_unsigned()) throw ConfigError(where);
            return v.get<std::uint64_t>();
        case Kind::flag:
            if (!v.is_boolean()) throw ConfigError(where);
            return v;
        case Kind::text:
            if (!v.is_string()) throw ConfigError(where);
            return v;
    }
    throw ConfigError(where);
}

void overlay_object(json& settings, const json& obj, const std::string& origin) {
    if (!obj.is_object()) throw ConfigError(origin + ": expected a flat JSON object");
    for (const auto& [name, value] : obj.items()) {
        const Key* key = find_key(name);
        if (!key) throw ConfigError(origin + ": unknown key '" + name + "'");
        settings[name] = check_json_value(*key, value);
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::vector<double> parse_list(const std::string& text, const char* key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ConfigError(std::string("invalid value for '") + key + "': " + text);
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(std::string("empty list for '") + key + "'");
    return out;
}

// Results of one subcommand.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
    json diagnostics = json::object();
    bool ok = true;
};

std::string format_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return v.dump();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
}

struct Context {
    json settings;
    unsigned threads = 1;
    std::string inject_fault;

    double real(const char* k) const { return settings.at(k).get<double>(); }
    long long integer(const char* k) const { return settings.at(k).get<long long>(); }
    std::uint64_t uint(const char* k) const { return settings.at(k).get<std::uint64_t>(); }
    std::string text(const char* k) const { return settings.at(k).get<std::string>(); }

    SolverConfig solver() const {
        SolverConfig c;
        c.t = real("t");
        c.x = real("x");
        c.k = static_cast<int>(integer("k"));
        c.n_paths = uint("paths");
        c.n_noise = uint("samples");
        c.dt = real("dt");
        c.bins.width = real("bins");
        c.degree = static_cast<int>(integer("degree"));
        c.seed = uint("seed");
        c.threads = threads;
        try {
            c.u0 = InitialCondition::from_name(text("u0"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid value for 'u0': ") + e.what());
        }
        return c;
    }
};

Table cmd_solve(const Context& ctx, bool limit) {
    const SolverConfig cfg = ctx.solver();
    const auto z = NoiseRealization::sample(cfg.k, cfg.seed, ctx.uint("draw"));
    Table t;
    if (limit) {
        t.columns = {"t", "x", "k", "n_paths", "value", "std_error", "truncated_value", "truncated_std_error"};
        FieldEstimate lim, trunc;
        if (cfg.t == 0.0) {
            lim = solve_fk_limit(cfg, z.z);
            trunc = lim;
        } else {
            const PathEnsemble paths(cfg, 0, true);
            lim = solve_fk_limit(paths, cfg.u0, z.z);
            trunc = solve_fk_truncated(paths, cfg.u0, z.z);
        }
        t.rows.push_back({cfg.t, cfg.x, cfg.k, cfg.n_paths, lim.value, lim.std_error, trunc.value, trunc.std_error});
    } else {
        t.columns = {"t", "x", "k", "n_paths", "value", "std_error"};
        const auto est = solve_fk_truncated(cfg, z.z);
        t.rows.push_back({cfg.t, cfg.x, cfg.k, cfg.n_paths, est.value, est.std_error});
    }
    return t;
}

Table cmd_converge(const Context& ctx) {
    SolverConfig cfg = ctx.solver();
    std::vector<int> ks;
    for (double v : parse_list(ctx.text("k_list"), "k_list")) {
        if (v < 1 || v != std::floor(v)) throw ConfigError("invalid value for 'k_list': " + ctx.text("k_list"));
        ks.push_back(static_cast<int>(v));
    }
    if (!std::is_sorted(ks.begin(), ks.end())) throw ConfigError("'k_list' must be nondecreasing");
    cfg.k = ks.back();
    cfg.validate();
    const auto z = NoiseRealization::sample(cfg.k, cfg.seed, ctx.uint("draw"));
    Table t;
    t.columns = {"k", "value", "std_error", "gap"};
    for (const auto& row : convergence_study(cfg, ks, z.z)) {
        t.rows.push_back({row.k, row.estimate.value, row.estimate.std_error, row.gap ? json(*row.gap) : json()});
    }
    return t;
}

Table cmd_chaos(const Context& ctx) {
    const SolverConfig cfg = ctx.solver();
    if (cfg.t == 0.0) throw ConfigError("invalid value for 't': chaos needs t > 0");
    PathConfig pc = cfg.paths(0);
    const auto kc = chaos_coefficients_mc(cfg.t, cfg.x, cfg.k, cfg.degree, cfg.u0, pc);
    Table t;
    t.columns = {"alpha", "order", "coefficient", "std_error"};
    for (const auto& [alpha, v] : kc.x_alpha.terms()) {
        const auto se = kc.std_errors.find(alpha);
        t.rows.push_back({to_string(alpha), alpha.order(), v, se == kc.std_errors.end() ? 0.0 : se->second});
    }
    t.diagnostics["truncation_tail"] = kc.truncation_tail;
    t.diagnostics["terms"] = kc.x_alpha.size();
    return t;
}

Table cmd_moments(const Context& ctx) {
    const SolverConfig cfg = ctx.solver();
    const long long q = ctx.integer("q");
    if (q < 1) throw ConfigError("invalid value for 'q': must be >= 1");
    Table t;
    t.columns = {"route", "q", "value", "std_error"};
    if (q == 1) {
        const auto m = mean_field(cfg);
        t.rows.push_back({"heat-semigroup", q, heat_semigroup(cfg.u0, cfg.t, cfg.x), 0.0});
        t.rows.push_back({"mean-field", q, m.value, m.std_error});
        return t;
    }
    const auto fk = moment_fk(static_cast<int>(q), cfg);
    const auto emp = empirical_moment(static_cast<int>(q), cfg);
    t.rows.push_back({"feynman-kac", q, fk.value, fk.std_error});
    t.rows.push_back({"empirical-raw", q, emp.raw.value, emp.raw.std_error});
    if (emp.bias_corrected) t.rows.push_back({"empirical-corrected", q, emp.corrected.value, emp.corrected.std_error});
    t.diagnostics["mean_bias"] = emp.mean_bias;
    return t;
}

PdeGrid pde_grid(const Context& ctx) {
    PdeGrid g;
    g.k = 1;
    g.x_half = ctx.real("x_half");
    g.z_half = ctx.real("z_half");
    g.h_x = ctx.real("h_x");
    g.h_z = ctx.real("h_z");
    g.dt = ctx.real("dt_pde");
    try {
        g.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError(e.what());
    }
    return g;
}

Table cmd_pde_check(const Context& ctx) {
    const SolverConfig cfg = ctx.solver();
    const PdeGrid grid = pde_grid(ctx);
    if (!(cfg.t > 0.0)) throw ConfigError("invalid value for 't': pde-check needs t > 0");
    const std::vector<double> probes{-1.0, -0.5, 0.0, 0.5, 1.0};
    const auto report = pde_cross_check(cfg.u0, grid, cfg.t, probes, probes, cfg.paths(0));
    Table t;
    t.columns = {"x",           "z",       "pde",     "pde_refined",     "fk",
                 "fk_std_error", "observed_order", "scheme_error", "rel_gap", "rel_gap_refined",
                 "within_tolerance"};
    for (const auto& p : report.probes) {
        t.rows.push_back({p.x, p.z, p.pde, p.pde_refined, p.fk, p.fk_se, p.observed_order, p.scheme_error, p.rel_gap,
                          p.rel_gap_refined, p.within_tolerance});
    }
    t.diagnostics["control_max_rel"] = report.control_max_rel;
    t.diagnostics["max_rel_gap"] = report.max_rel_gap;
    t.diagnostics["median_gap"] = report.median_gap;
    t.diagnostics["median_gap_refined"] = report.median_gap_refined;
    t.diagnostics["refinement_factor"] = report.refinement_factor;
    t.diagnostics["within_tolerance"] = report.within_tolerance;
    if (const auto path = ctx.text("field_out"); !path.empty()) {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path);
        solve_reduced_pde(cfg.u0, grid, cfg.t).write_csv(f);
    }
    return t;
}

Table cmd_stransform(const Context& ctx) {
    SolverConfig cfg = ctx.solver();
    const std::vector<double> xi = parse_list(ctx.text("xi"), "xi");
    cfg.k = static_cast<int>(xi.size());
    SpaceTimeGrid grid;
    grid.time_nodes = ctx.uint("time_nodes");
    grid.space_nodes = ctx.uint("space_nodes");
    grid.half_width = ctx.real("half_width");
    if (grid.time_nodes < 3 || grid.space_nodes < 3 || !(grid.half_width > 0.0)) {
        throw ConfigError("invalid mild-check grid");
    }
    if (!(cfg.t > 0.0)) throw ConfigError("invalid value for 't': stransform needs t > 0");
    const auto r = s_transform_residual(xi, cfg, grid);
    Table t;
    t.columns = {"nodes", "max_abs", "mean_abs", "max_budget", "mean_budget", "max_std_error", "mean_std_error",
                 "max_quadrature_error", "nodes_within_budget"};
    t.rows.push_back({r.nodes, r.max_abs, r.mean_abs, r.max_budget, r.mean_budget, r.max_std_error,
                      r.mean_std_error, r.max_quadrature_error, r.nodes_within_budget});
    return t;
}

Table cmd_localtime(const Context& ctx) {
    const SolverConfig cfg = ctx.solver();
    if (!(cfg.t > 0.0)) throw ConfigError("invalid value for 't': localtime needs t > 0");
    const PathConfig pc = cfg.paths(0);
    const std::size_t n = cfg.n_paths;
    std::vector<AlphaEstimates> est(n);
    parallel_for(n, cfg.threads, [&](std::size_t p) {
        RngStream stream(pc.seed, StreamRole::brownian, p, pc.block);
        est[p] = alpha(sample_path(cfg.x, pc.grid, stream), cfg.k, cfg.bins);
    });
    Table t;
    t.columns = {"path", "alpha_parseval", "alpha_hist", "rel_gap"};
    std::vector<double> gaps;
    for (std::size_t p = 0; p < n; ++p) {
        const double gap = std::abs(est[p].parseval - est[p].histogram) / est[p].histogram;
        gaps.push_back(gap);
        t.rows.push_back({p, est[p].parseval, est[p].histogram, gap});
    }
    std::sort(gaps.begin(), gaps.end());
    t.diagnostics["median_rel_gap"] = n % 2 ? gaps[n / 2] : 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
    return t;
}

Table cmd_validate(const Context& ctx) {
    ValidationOptions o;
    o.quick = ctx.settings.at("quick").get<bool>();
    o.seed = ctx.uint("seed");
    o.threads = ctx.threads;
    o.inject_fault = ctx.inject_fault;
    Table t;
    t.columns = {"check", "deviation", "tolerance", "passed"};
    for (const auto& c : run_validation(o)) {
        t.rows.push_back({c.name, c.deviation, c.tolerance, c.passed});
        if (!c.passed) t.ok = false;
    }
    return t;
}

Table dispatch(const Context& ctx) {
    const std::string cmd = ctx.text("command");
    if (cmd == "solve") return cmd_solve(ctx, false);
    if (cmd == "solve-limit") return cmd_solve(ctx, true);
    if (cmd == "converge-k") return cmd_converge(ctx);
    if (cmd == "chaos") return cmd_chaos(ctx);
    if (cmd == "moments") return cmd_moments(ctx);
    if (cmd == "pde-check") return cmd_pde_check(ctx);
    if (cmd == "stransform") return cmd_stransform(ctx);
    if (cmd == "localtime") return cmd_localtime(ctx);
    if (cmd == "validate") return cmd_validate(ctx);
    throw ConfigError("unknown subcommand '" + cmd + "'");
}

void write_output(std::ostream& os, const Table& t, const json& config, const std::string& format) {
    if (format == "csv") {
        for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
            os << '\n';
        }
        return;
    }
    json doc;
    doc["config"] = config;
    doc["results"] = json::array();
    for (const auto& row : t.rows) {
        json r = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = row[i];
        doc["results"].push_back(r);
    }
    doc["diagnostics"] = t.diagnostics;
    doc["provenance"] = {{"config_hash", fnv1a_hex(config.dump())},
                         {"seed", config.at("seed")},
                         {"version", "shefk " SHEFK_VERSION}};
    os << doc.dump(2) << '\n';
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic heat equation: Feynman-Kac, chaos and PDE routes", "shefk"};
    app.set_version_flag("--version", "shefk " SHEFK_VERSION);

    std::string command, config_path, replay_path, inject_fault;
    std::map<std::string, std::string> flag_values;
    bool quick = false;
    app.add_option("command", command,
                   "solve | solve-limit | converge-k | chaos | moments | pde-check | stransform | localtime | validate");
    app.add_option("--config", config_path, "flat JSON config file");
    app.add_option("--replay", replay_path, "rerun the configuration stored in a JSON result");
    app.add_option("--inject-fault", inject_fault)->group("");
    for (const auto& k : keys()) {
        if (std::string(k.name) == "command") continue;
        if (k.kind == Kind::flag) {
            app.add_flag(flag_name(k.name), quick, k.help);
        } else {
            app.add_option(flag_name(k.name), flag_values[k.name], k.help);
        }
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << "shefk " SHEFK_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    json settings = json::object();
    Context ctx;
    try {
        for (const auto& k : keys()) settings[k.name] = k.fallback;
        if (!replay_path.empty()) {
            const json doc = read_json_file(replay_path);
            if (!doc.is_object() || !doc.contains("config")) throw ConfigError(replay_path + ": no 'config' object");
            overlay_object(settings, doc.at("config"), replay_path);
        }
        if (!config_path.empty()) overlay_object(settings, read_json_file(config_path), config_path);
        if (!command.empty()) settings["command"] = command;
        for (const auto& k : keys()) {
            if (k.kind == Kind::flag) {
                if (app.count(flag_name(k.name)) > 0) settings[k.name] = quick;
            } else if (std::string(k.name) != "command" && app.count(flag_name(k.name)) > 0) {
                settings[k.name] = parse_value(k, flag_values[k.name]);
            }
        }
        std::vector<std::string> missing;
        if (settings["command"].get<std::string>().empty()) missing.emplace_back("command");
        if (!missing.empty()) {
            std::string msg = "missing required keys:";
            for (const auto& m : missing) msg += " " + m;
            throw ConfigError(msg);
        }
        const std::string format = settings["format"].get<std::string>();
        if (format != "csv" && format != "json") throw ConfigError("invalid value for 'format': " + format);
        const auto threads = settings["threads"].get<std::uint64_t>();
        ctx.threads = threads == 0 ? default_threads() : static_cast<unsigned>(threads);
        ctx.settings = settings;
        ctx.inject_fault = inject_fault;
        ctx.solver().validate();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    json config = json::object();
    for (const auto& k : keys()) {
        if (k.in_config) config[k.name] = settings[k.name];
    }

    Table table;
    try {
        table = dispatch(ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }

    const std::string format = settings["format"].get<std::string>();
    const std::string path = settings["out"].get<std::string>();
    if (path.empty()) {
        write_output(out, table, config, format);
    } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            err << "error: cannot write " << path << '\n';
            return kExitFailure;
        }
        write_output(f, table, config, format);
    }
    if (!table.ok) {
        err << "one or more checks failed\n";
        return kExitFailure;
    }
    return kExitOk;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace shefk::cli
