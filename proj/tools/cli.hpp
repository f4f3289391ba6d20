#pragma once

#include <treeharmonic/acceptance.hpp>
#include <treeharmonic/csv.hpp>
#include <treeharmonic/dirichlet.hpp>
#include <treeharmonic/fatou.hpp>
#include <treeharmonic/measure.hpp>
#include <treeharmonic/operators.hpp>
#include <treeharmonic/tree.hpp>
#include <treeharmonic/ucp.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace treeharmonic::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_violation = 2;

/// Bad command line; the message names the offending flag.
class usage_error : public input_error {
public:
    using input_error::input_error;
};

/// --help was given; text is the help screen.
struct help_requested {
    std::string text;
};

struct run_config {
    /// "solve", "measure", "bound", "lower-bound", "bcp", "ucp extract", "ucp counterexample",
    /// "ucp classify", "tau", "axioms" or "reproduce-all".
    std::string command;
    /// Arguments without output paths, recorded in the meta line.
    std::string config_text;

    std::string m_text = "3";
    unsigned m = 3;
    unsigned m_hi = 3;
    std::string op_spec = "F1:alpha=0.5";
    std::string f_spec;
    std::string g_spec;
    std::string cells;
    std::string interval;
    unsigned n = 0;
    std::string sweep_depths;
    unsigned extra_depth = 0;
    double c = 1.0;
    std::optional<double> gamma;
    std::optional<double> theta;
    double M = 1.0;
    double eps = 0.1;
    std::optional<double> target_eps;
    std::uint64_t seed = 0;

    std::string out;
    std::string csv;
    std::string format_text = "csv";
    table_format format = table_format::csv;
    std::string dump;

    unsigned samples = 10000;
    double range = 1.0;
    std::optional<double> tol;

    unsigned restarts = default_tau_restarts;
    std::string family = "F1";
    std::vector<double> alphas{0.5};
    bool limits = false;
    unsigned numeric_max_m = 12;

    std::vector<unsigned> rho;
    unsigned depth = 6;
    std::string set_file;
    unsigned max_depth = 10;
    std::string pattern;
    std::optional<double> delta;
};

namespace detail {

inline std::pair<unsigned, unsigned> parse_m(const std::string &text) {
    try {
        const auto dots = text.find("..");
        const auto lo = treeharmonic::detail::parse_unsigned(std::string_view(text).substr(0, dots), "--m");
        const auto hi = dots == std::string::npos ? lo
                                                  : treeharmonic::detail::parse_unsigned(std::string_view(text).substr(dots + 2), "--m");
        if (lo > 100000 || hi > 100000) {
            throw usage_error("--m " + text + " is too large");
        }
        return {static_cast<unsigned>(lo), static_cast<unsigned>(hi)};
    } catch (const usage_error &) {
        throw;
    } catch (const error &e) {
        throw usage_error(std::string("--m: ") + e.what());
    }
}

inline std::string joined_config(const std::vector<std::string> &args) {
    std::string text;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string &a = args[i];
        if (a == "--out" || a == "-o" || a == "--csv") {
            ++i;
            continue;
        }
        if (a.rfind("--out=", 0) == 0 || a.rfind("--csv=", 0) == 0) {
            continue;
        }
        text += (text.empty() ? "" : " ") + a;
    }
    return text;
}

template <typename Check>
void rewrap(const char *flag, Check &&check) {
    try {
        check();
    } catch (const usage_error &) {
        throw;
    } catch (const error &e) {
        throw usage_error(std::string(flag) + ": " + e.what());
    }
}

inline void validate(run_config &cfg) {
    const auto [lo, hi] = parse_m(cfg.m_text);
    if (lo < 3 || hi < 3) {
        throw usage_error("--m must be at least 3 (got " + cfg.m_text + ")");
    }
    if (hi < lo) {
        throw usage_error("--m range " + cfg.m_text + " is empty");
    }
    if (lo != hi && cfg.command != "tau") {
        throw usage_error("--m accepts a range only for tau");
    }
    cfg.m = lo;
    cfg.m_hi = hi;
    rewrap("--format", [&] { cfg.format = parse_table_format(cfg.format_text); });
    if (!cfg.csv.empty()) {
        cfg.format = table_format::csv;
    }

    const bool uses_op = cfg.command != "tau" && cfg.command != "reproduce-all";
    if (uses_op) {
        rewrap("--op", [&] { (void) parse_operator(cfg.op_spec, cfg.m); });
    }
    if (!cfg.f_spec.empty()) {
        rewrap("--f", [&] { (void) parse_boundary(cfg.f_spec, cfg.m); });
    }
    if (!cfg.g_spec.empty()) {
        rewrap("--g", [&] { (void) parse_boundary(cfg.g_spec, cfg.m); });
    }
    if (!cfg.cells.empty()) {
        rewrap("--cells", [&] { (void) parse_cells(cfg.cells, cfg.m); });
    }
    if (!cfg.interval.empty()) {
        rewrap("--interval", [&] { (void) parse_interval(cfg.interval); });
    }
    if (!cfg.cells.empty() && !cfg.interval.empty()) {
        throw usage_error("--cells and --interval are mutually exclusive");
    }
    if (!(cfg.c > 0.0)) {
        throw usage_error("--c must be positive");
    }
    if (!(cfg.M > 0.0)) {
        throw usage_error("--M must be positive");
    }
    if (!(cfg.eps > 0.0)) {
        throw usage_error("--eps must be positive");
    }
    if (cfg.target_eps && !(*cfg.target_eps > 0.0)) {
        throw usage_error("--target-eps must be positive");
    }
    if (cfg.gamma && !(*cfg.gamma > 0.0)) {
        throw usage_error("--gamma must be positive");
    }
    if (cfg.theta && !(*cfg.theta > 0.0)) {
        throw usage_error("--theta must be positive");
    }
    if (cfg.samples == 0) {
        throw usage_error("--samples must be at least 1");
    }
    if (!(cfg.range > 0.0)) {
        throw usage_error("--range must be positive");
    }
    if (cfg.tol && !(*cfg.tol > 0.0)) {
        throw usage_error("--tol must be positive");
    }
    if (cfg.restarts == 0) {
        throw usage_error("--restarts must be at least 1");
    }
    if (cfg.family != "F1" && cfg.family != "F2") {
        throw usage_error("--family must be F1 or F2");
    }
    for (const double a : cfg.alphas) {
        if (!(a >= 0.0 && a < 1.0)) {
            throw usage_error("--alpha values must lie in [0, 1)");
        }
    }
    for (const unsigned r : cfg.rho) {
        if (r == 0) {
            throw usage_error("--rho entries must be positive");
        }
    }
    if (cfg.delta && !(*cfg.delta > 0.0 && *cfg.delta < 1.0)) {
        throw usage_error("--delta must lie in (0, 1)");
    }
    if (!cfg.dump.empty() && cfg.dump != "csv") {
        rewrap("--dump", [&] { cfg.format = parse_table_format(cfg.dump); });
    }
    if (!cfg.sweep_depths.empty()) {
        rewrap("--sweep-depths", [&] {
            const auto dots = cfg.sweep_depths.find("..");
            const auto a = treeharmonic::detail::parse_unsigned(std::string_view(cfg.sweep_depths).substr(0, dots), "depth");
            const auto b = dots == std::string::npos
                               ? a
                               : treeharmonic::detail::parse_unsigned(std::string_view(cfg.sweep_depths).substr(dots + 2), "depth");
            if (a < 1 || b < a) {
                throw input_error("needs 1 <= a <= b");
            }
        });
    }
}

}  // namespace detail

/**
 * Parses and range-checks the command line. Throws usage_error naming the
 * offending flag, or help_requested for --help.
 */
[[nodiscard]] inline run_config parse_args(const std::vector<std::string> &args) {
    run_config cfg;
    CLI::App app{"treeharmonic: averaging operators on m-ary trees", "treeharmonic"};
    app.require_subcommand(1);

    const auto add_m = [&](CLI::App *sub) { sub->add_option("--m", cfg.m_text, "Branching number m >= 3 (tau also takes a..b)"); };
    const auto add_op = [&](CLI::App *sub) {
        sub->add_option("--op", cfg.op_spec, "Operator: F0:alpha=a, F1:alpha=a, F2:alpha=a or Fp:p=x");
    };
    const auto add_output = [&](CLI::App *sub) {
        sub->add_option("-o,--out", cfg.out, "Output path (default stdout)");
        sub->add_option("--csv", cfg.csv, "Write the table as CSV to this path");
        sub->add_option("--format", cfg.format_text, "Table format: csv, tsv or json-lines");
        sub->add_option("--seed", cfg.seed, "Seed recorded in the meta line and used by randomized commands");
    };
    const auto add_set = [&](CLI::App *sub) {
        sub->add_option("--cells", cfg.cells, "m-adic cells n:k0..k1");
        sub->add_option("--interval", cfg.interval, "Exact interval a/b..c/d");
    };

    auto *solve_cmd = app.add_subcommand("solve", "Solve the Dirichlet problem at depth n");
    add_m(solve_cmd);
    add_op(solve_cmd);
    add_output(solve_cmd);
    solve_cmd->add_option("--f", cfg.f_spec, "Boundary data: id, const:v, sin:k, indicator:n:k0..k1[:h], table:path");
    solve_cmd->add_option("--n", cfg.n, "Depth (default 6)");
    solve_cmd->add_option("--target-eps", cfg.target_eps, "Pick the depth by refinement to this accuracy");
    solve_cmd->add_option("--dump", cfg.dump, "Write one row per vertex: level,index,psi,value (csv, tsv or json-lines)");

    auto *measure_cmd = app.add_subcommand("measure", "Harmonic measure of an m-adic set or interval");
    add_m(measure_cmd);
    add_op(measure_cmd);
    add_output(measure_cmd);
    add_set(measure_cmd);
    measure_cmd->add_option("--n", cfg.n, "Cover level for --interval (default 6)");

    for (const char *name : {"bound", "lower-bound"}) {
        auto *cmd = app.add_subcommand(name, std::string(name) == "bound" ? "Perturbation gap against the upper and lower bounds"
                                                                          : "Perturbation gap against the lower bound");
        add_m(cmd);
        add_op(cmd);
        add_output(cmd);
        cmd->add_option("--cells", cfg.cells, "m-adic cells n:k0..k1");
        cmd->add_option("--sweep-depths", cfg.sweep_depths, "All single cells and adjacent pairs at levels a..b");
        cmd->add_option("--f", cfg.f_spec, "Boundary data (default const:0)");
        cmd->add_option("--c", cfg.c, "Perturbation height c > 0");
        cmd->add_option("--gamma", cfg.gamma, "Override gamma (at most -log_m kappa)");
        cmd->add_option("--theta", cfg.theta, "Override theta (at least -log_m eta)");
        cmd->add_option("--extra-depth", cfg.extra_depth, "Also solve this many levels deeper (gap_deeper column)");
    }

    auto *bcp_cmd = app.add_subcommand("bcp", "Boundary comparison: f and g equal off I");
    add_m(bcp_cmd);
    add_op(bcp_cmd);
    add_output(bcp_cmd);
    bcp_cmd->add_option("--cells", cfg.cells, "m-adic cells n:k0..k1")->required();
    bcp_cmd->add_option("--f", cfg.f_spec, "Boundary data f (default const:0)");
    bcp_cmd->add_option("--g", cfg.g_spec, "Boundary data g (default f + M on I)");
    bcp_cmd->add_option("--M", cfg.M, "Bound on sup|f| + sup|g|");
    bcp_cmd->add_option("--eps", cfg.eps, "Target accuracy");
    bcp_cmd->add_option("--n", cfg.n, "Data level (default the level of I)");
    bcp_cmd->add_option("--gamma", cfg.gamma, "Override gamma");

    auto *ucp_cmd = app.add_subcommand("ucp", "Unique continuation: profiles, counterexamples, verdicts");
    ucp_cmd->require_subcommand(1);
    auto *extract_cmd = ucp_cmd->add_subcommand("extract", "rho profile of a vertex set");
    add_m(extract_cmd);
    add_op(extract_cmd);
    add_output(extract_cmd);
    extract_cmd->add_option("--set-file", cfg.set_file, "One digit string per line")->required();
    extract_cmd->add_option("--max-depth", cfg.max_depth, "Deepest level examined");
    auto *counter_cmd = ucp_cmd->add_subcommand("counterexample", "Bounded harmonic function vanishing on the canonical set");
    add_m(counter_cmd);
    add_op(counter_cmd);
    add_output(counter_cmd);
    counter_cmd->add_option("--rho", cfg.rho, "Gaps rho_1,...,rho_K")->delimiter(',')->required();
    counter_cmd->add_option("--depth", cfg.depth, "Stored depth, at least the sum of rho");
    auto *classify_cmd = ucp_cmd->add_subcommand("classify", "Verdict for a declared rho pattern or a finite profile");
    add_m(classify_cmd);
    add_op(classify_cmd);
    add_output(classify_cmd);
    classify_cmd->add_option("--pattern", cfg.pattern, "constant:r, linear:a,b or bounded:s");
    classify_cmd->add_option("--rho", cfg.rho, "Finite profile rho_1,...,rho_K")->delimiter(',');
    classify_cmd->add_option("--delta", cfg.delta, "delta in (0, 1) (default F(0,...,0,1) of --op)");

    auto *tau_cmd = app.add_subcommand("tau", "Minimize sum exp(x_j) over F(x) = 0 and compare with the closed forms");
    add_m(tau_cmd);
    add_output(tau_cmd);
    tau_cmd->add_option("--family", cfg.family, "F1 or F2");
    tau_cmd->add_option("--alpha", cfg.alphas, "alpha values in [0, 1)")->delimiter(',');
    tau_cmd->add_option("--restarts", cfg.restarts, "Simplex restarts");
    tau_cmd->add_flag("--limits", cfg.limits, "Large-m table: exact dims against the limit");
    tau_cmd->add_option("--numeric-max-m", cfg.numeric_max_m, "With --limits, run the simplex up to this m");

    auto *axioms_cmd = app.add_subcommand("axioms", "Fuzz the operator axioms");
    add_m(axioms_cmd);
    add_op(axioms_cmd);
    add_output(axioms_cmd);
    axioms_cmd->add_option("--samples", cfg.samples, "Number of random samples");
    axioms_cmd->add_option("--range", cfg.range, "Samples drawn from [-range, range]^m");
    axioms_cmd->add_option("--tol", cfg.tol, "Violation tolerance (default 1e-9, 1e-7 for Fp)");

    auto *all_cmd = app.add_subcommand("reproduce-all", "Run every acceptance criterion");
    add_output(all_cmd);
    all_cmd->add_option("--restarts", cfg.restarts, "Simplex restarts for the tau criterion");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &e) {
        std::ostringstream out;
        std::ostringstream err;
        (void) app.exit(e, out, err);
        throw help_requested{out.str()};
    } catch (const CLI::CallForAllHelp &e) {
        std::ostringstream out;
        std::ostringstream err;
        (void) app.exit(e, out, err);
        throw help_requested{out.str()};
    } catch (const CLI::ParseError &e) {
        throw usage_error(e.what());
    }

    const auto *chosen = app.get_subcommands().front();
    cfg.command = chosen->get_name();
    if (cfg.command == "ucp") {
        cfg.command += " " + chosen->get_subcommands().front()->get_name();
    }
    cfg.config_text = detail::joined_config(args);
    detail::validate(cfg);
    return cfg;
}

namespace detail {

class output_target {
public:
    explicit output_target(const std::string &path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) {
                throw input_error("cannot open output file '" + path + "'");
            }
        }
    }

    [[nodiscard]] std::ostream &stream() { return file_.is_open() ? file_ : std::cout; }
    [[nodiscard]] bool is_stdout() const { return !file_.is_open(); }

private:
    std::ofstream file_;
};

inline run_meta meta_of(const run_config &cfg) { return {cfg.config_text, cfg.seed, {}}; }

inline std::string path_of(const run_config &cfg) { return cfg.csv.empty() ? cfg.out : cfg.csv; }

inline cell optional_cell(const std::optional<double> &v) {
    if (v) {
        return *v;
    }
    return std::string();
}

inline std::string join(const std::vector<unsigned> &values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += (i ? "," : "") + std::to_string(values[i]);
    }
    return s;
}

inline int run_solve(const run_config &cfg) {
    const auto op = parse_operator(cfg.op_spec, cfg.m);
    const auto f = parse_boundary(cfg.f_spec.empty() ? "id" : cfg.f_spec, cfg.m);
    unsigned n = cfg.n == 0 ? 6 : cfg.n;
    if (cfg.target_eps) {
        n = refine_until(op, f, *cfg.target_eps, 16).n_used;
    }
    const auto u = solve(op, f, n);
    const double residual = u.harmonicity_residual(op);

    output_target target(path_of(cfg));
    const bool dumping = !cfg.dump.empty();
    std::ostream &text = !dumping ? target.stream() : target.is_stdout() ? std::cerr : std::cout;
    text << "operator " << op.name() << " m=" << cfg.m << " f=" << f.describe() << " n=" << n << '\n';
    text << "root " << format_double(u.root()) << '\n';
    text << "harmonicity residual " << format_double(residual) << '\n';
    if (const auto L = f.lipschitz_constant()) {
        text << "error bound " << format_double(*L / static_cast<double>(level_size(cfg.m, n))) << " (L/m^n, L="
             << format_double(*L) << ")\n";
    } else {
        text << "error bound unknown (no Lipschitz constant)\n";
    }
    if (dumping) {
        table_writer w(target.stream(), {"level", "index", "psi", "value"}, cfg.format);
        for (unsigned k = 0; k <= n; ++k) {
            const double scale = static_cast<double>(level_size(cfg.m, k));
            for (std::size_t i = 0; i < u.levels[k].size(); ++i) {
                w.row({static_cast<std::int64_t>(k), static_cast<std::int64_t>(i), static_cast<double>(i) / scale,
                       u.levels[k][i]});
            }
        }
        w.finish(meta_of(cfg));
    }
    return residual <= 1e-9 ? exit_ok : exit_violation;
}

inline int run_measure(const run_config &cfg) {
    const auto op = parse_operator(cfg.op_spec, cfg.m);
    output_target target(path_of(cfg));
    table_writer w(target.stream(), {"m", "op", "set", "kind", "cells", "omega"}, cfg.format);
    bool ok = true;
    const auto emit = [&](const std::string &set, const std::string &kind, const madic_union &I) {
        const double omega = harmonic_measure(op, I);
        ok = ok && omega >= -1e-12 && omega <= 1.0 + 1e-12;
        w.row({static_cast<std::int64_t>(cfg.m), op.name(), set, kind, I.to_string(), omega});
    };
    if (!cfg.cells.empty()) {
        emit(cfg.cells, "cells", parse_cells(cfg.cells, cfg.m));
    } else if (!cfg.interval.empty()) {
        const auto [a, b] = parse_interval(cfg.interval);
        const auto bracket = madic_cover(a, b, cfg.n == 0 ? 6 : cfg.n, cfg.m);
        if (bracket.inner) {
            emit(cfg.interval, "inner", *bracket.inner);
        } else {
            w.row({static_cast<std::int64_t>(cfg.m), op.name(), cfg.interval, std::string("inner"), std::string(), 0.0});
        }
        emit(cfg.interval, "outer", bracket.outer);
    } else {
        throw usage_error("measure needs --cells or --interval");
    }
    w.finish(meta_of(cfg));
    return ok ? exit_ok : exit_violation;
}

inline std::vector<madic_union> bound_cases(const run_config &cfg) {
    if (!cfg.cells.empty()) {
        return {parse_cells(cfg.cells, cfg.m)};
    }
    if (cfg.sweep_depths.empty()) {
        throw usage_error(cfg.command + " needs --cells or --sweep-depths");
    }
    const auto dots = cfg.sweep_depths.find("..");
    const auto a = treeharmonic::detail::parse_unsigned(std::string_view(cfg.sweep_depths).substr(0, dots), "depth");
    const auto b = dots == std::string::npos
                       ? a
                       : treeharmonic::detail::parse_unsigned(std::string_view(cfg.sweep_depths).substr(dots + 2), "depth");
    std::vector<madic_union> out;
    for (auto n = a; n <= b; ++n) {
        const auto level = acceptance::detail::singles_and_pairs(cfg.m, static_cast<unsigned>(n));
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

inline int run_bound(const run_config &cfg) {
    const bool lower_only = cfg.command == "lower-bound";
    const auto op = parse_operator(cfg.op_spec, cfg.m);
    const auto f = parse_boundary(cfg.f_spec.empty() ? "const:0" : cfg.f_spec, cfg.m);
    if (lower_only) {
        (void) treeharmonic::detail::required_eta(op);
    }
    const auto cases = bound_cases(cfg);

    std::vector<std::string> columns = lower_only
        ? std::vector<std::string>{"m", "op", "n", "k0", "k1", "c", "gap", "lower_bound", "theta", "satisfied"}
        : std::vector<std::string>{"m", "op", "n", "k0", "k1", "c", "gap", "bound_thm1", "bound_l54", "bound_l55",
                                   "lower_bound", "gamma", "theta", "satisfied"};
    if (cfg.extra_depth > 0) {
        columns.emplace_back("gap_deeper");
    }
    output_target target(path_of(cfg));
    table_writer w(target.stream(), columns, cfg.format);

    std::vector<bound_report> reports(cases.size());
    std::vector<double> deeper(cases.size());
    std::size_t i = 0;
    while (i < cases.size()) {
        const unsigned n = cases[i].level;
        std::size_t j = i;
        while (j < cases.size() && cases[j].level == n) {
            ++j;
        }
        const gap_engine engine(op, f, n);
        std::optional<gap_engine> deep;
        if (cfg.extra_depth > 0) {
            deep.emplace(op, f, n + cfg.extra_depth);
        }
        parallel_for(j - i, [&](std::size_t k) {
            const auto &I = cases[i + k];
            reports[i + k] = lower_only ? check_lower_bound(engine, I, cfg.c, cfg.theta)
                                        : check_bounds(engine, I, cfg.c, cfg.gamma, cfg.theta);
            if (deep) {
                deeper[i + k] = deep->gap(I, cfg.c);
            }
        }, 64);
        i = j;
    }

    bool ok = true;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto &r = reports[k];
        const auto &I = cases[k];
        ok = ok && r.all_satisfied();
        std::vector<cell> row{static_cast<std::int64_t>(cfg.m), op.name(), static_cast<std::int64_t>(r.n),
                              static_cast<std::int64_t>(I.k0), static_cast<std::int64_t>(I.k1), r.c, r.measured_gap};
        if (lower_only) {
            row.insert(row.end(), {optional_cell(r.lower_bound), optional_cell(r.theta), r.all_satisfied()});
        } else {
            const bool has_upper = !r.upper_kind.empty();
            row.insert(row.end(), {has_upper ? cell{r.bound_general} : cell{std::string()}, optional_cell(r.bound_single),
                                   optional_cell(r.bound_pair), optional_cell(r.lower_bound),
                                   has_upper ? cell{r.gamma} : cell{std::string()}, optional_cell(r.theta),
                                   r.all_satisfied()});
        }
        if (cfg.extra_depth > 0) {
            row.emplace_back(deeper[k]);
        }
        w.row(row);
    }
    w.finish(meta_of(cfg));
    return ok ? exit_ok : exit_violation;
}

inline int run_bcp(const run_config &cfg) {
    const auto op = parse_operator(cfg.op_spec, cfg.m);
    const auto I = parse_cells(cfg.cells, cfg.m);
    const auto f = parse_boundary(cfg.f_spec.empty() ? "const:0" : cfg.f_spec, cfg.m);
    const auto g = cfg.g_spec.empty() ? f.plus_indicator(I, cfg.M) : parse_boundary(cfg.g_spec, cfg.m);
    const std::optional<unsigned> level = cfg.n == 0 ? std::nullopt : std::optional<unsigned>(cfg.n);
    const auto r = boundary_comparison(op, f, g, I, cfg.M, cfg.eps, level, cfg.gamma);
    output_target target(path_of(cfg));
    table_writer w(target.stream(), {"m", "op", "cells", "M", "eps", "gap", "gamma", "delta_required", "applicable", "satisfied"},
                   cfg.format);
    w.row({static_cast<std::int64_t>(cfg.m), op.name(), I.to_string(), cfg.M, cfg.eps, r.gap, r.gamma, r.delta_required,
           r.applicable, r.satisfied});
    w.finish(meta_of(cfg));
    return r.applicable && !r.satisfied ? exit_violation : exit_ok;
}

inline int run_ucp_extract(const run_config &cfg) {
    const auto op = parse_operator(cfg.op_spec, cfg.m);
    const auto U = read_vertex_file(cfg.set_file, cfg.m);
    const auto p = extract_rho(U, cfg.m, cfg.max_depth, op);
    output_target target(path_of(cfg));
    std::ostream &out = target.stream();
    out << "vertices " << U.size() << '\n';
    out << "rho " << join(p.rho) << '\n';
    out << "eta " << join(p.eta) << '\n';
    out << "delta " << format_double(p.delta) << '\n';
    out << "P0 " << (p.p0_density_ok ? "ok" : "fails") << '\n';
    out << "P1 " << (p.p1_ok ? "ok" : "fails") << '\n';
    out << "P2 " << (p.p2_ok ? "ok" : "fails") << '\n';
    out << "series partial sum " << format_double(series_partial(p.delta, p.rho)) << '\n';
    out << "verdict " << to_string(classify_profile(p.delta, p.rho)) << '\n';
    if (!p.witness.empty()) {
        out << "witness " << p.witness << '\n';
    }
    if (!p.note.empty()) {
        out << "note " << p.note << '\n';
    }
    return exit_ok;
}

template <tree_scalar T>
int write_counterexample(const run_config &cfg, const averaging_op &op) {
    const auto ce = build_counterexample<T>(op, cfg.rho, cfg.depth);
    output_target target(path_of(cfg));
    std::ostream &text = target.is_stdout() ? std::cerr : std::cout;
    text << "operator " << op.name() << " m=" << cfg.m << " rho=" << join(cfg.rho) << " depth=" << cfg.depth << '\n';
    text << "delta " << ce.delta << '\n';
    text << "harmonicity residual " << ce.residual << '\n';
    text << "vanishes on U " << (ce.vanishes_on_u ? "yes" : "no") << " (" << ce.hits.size() << " vertices)\n";
    for (std::size_t k = 0; k < ce.level_max.size(); ++k) {
        text << "level " << ce.eta[k] << " max " << ce.level_max[k] << ", product of M_i for i <= " << k + 1 << " is " << ce.mk[k] << '\n';
    }
    table_writer w(target.stream(), {"level", "index", "psi", "value", "exact"}, cfg.format);
    for (unsigned k = 0; k <= ce.u.depth; ++k) {
        const double scale = static_cast<double>(level_size(cfg.m, k));
        for (std::size_t i = 0; i < ce.u.levels[k].size(); ++i) {
            const T &v = ce.u.levels[k][i];
            std::ostringstream exact;
            exact << v;
            w.row({static_cast<std::int64_t>(k), static_cast<std::int64_t>(i), static_cast<double>(i) / scale, to_double(v),
                   exact.str()});
        }
    }
    w.finish(meta_of(cfg));
    bool ok = ce.vanishes_on_u && to_double(ce.residual) <= 1e-12;
    for (std::size_t k = 0; k < ce.level_max.size(); ++k) {
        ok = ok && abs_value<T>(T(ce.level_max[k] - ce.mk[k])) <= T(1e-12);
    }
    return ok ? exit_ok : exit_violation;
}

inline int run_ucp_counterexample(const run_config &cfg) {
    const auto op = parse_operator(cfg.op_spec, cfg.m);
    return op.supports_exact() ? write_counterexample<rational>(cfg, op) : write_counterexample<double>(cfg, op);
}

inline rho_pattern parse_pattern(const std::string &text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    const auto number = [&](const std::string &s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) {
                throw std::invalid_argument(s);
            }
            return v;
        } catch (const std::exception &) {
            throw usage_error("--pattern: malformed number '" + s + "'");
        }
    };
    if (head == "constant" && !rest.empty()) {
        const double r = number(rest);
        if (!(r >= 1.0) || r != std::floor(r)) {
            throw usage_error("--pattern: constant rho must be a positive integer");
        }
        return rho_pattern::constant(static_cast<unsigned>(r));
    }
    if (head == "linear" && !rest.empty()) {
        const auto comma = rest.find(',');
        if (comma == std::string::npos) {
            throw usage_error("--pattern: linear needs a,b");
        }
        return rho_pattern::linear(number(rest.substr(0, comma)), number(rest.substr(comma + 1)));
    }
    if (head == "bounded" && !rest.empty()) {
        return rho_pattern::bounded(number(rest));
    }
    throw usage_error("--pattern must be constant:r, linear:a,b or bounded:s");
}

inline int run_ucp_classify(const run_config &cfg) {
    const auto op = parse_operator(cfg.op_spec, cfg.m);
    const double d = cfg.delta.value_or(delta<double>(op));
    output_target target(path_of(cfg));
    std::ostream &out = target.stream();
    out << "delta " << format_double(d) << '\n';
    if (!cfg.pattern.empty()) {
        out << "pattern " << cfg.pattern << '\n';
        out << "verdict " << to_string(classify_pattern(d, parse_pattern(cfg.pattern))) << '\n';
    } else if (!cfg.rho.empty()) {
        out << "rho " << join(cfg.rho) << '\n';
        out << "series partial sum " << format_double(series_partial(d, cfg.rho)) << '\n';
        out << "verdict " << to_string(classify_profile(d, cfg.rho)) << '\n';
    } else {
        throw usage_error("ucp classify needs --pattern or --rho");
    }
    return exit_ok;
}

inline int run_tau(const run_config &cfg) {
    output_target target(path_of(cfg));
    const auto family = cfg.family == "F1" ? tau_family::F1 : tau_family::F2;
    if (cfg.limits) {
        table_writer w(target.stream(), {"m", "alpha", "dim_numeric", "dim_exact", "dim_closed", "limit"}, cfg.format);
        for (const double alpha : cfg.alphas) {
            std::vector<unsigned> grid;
            for (unsigned m = cfg.m; m <= cfg.m_hi; ++m) {
                grid.push_back(m);
            }
            for (const auto &row : dim_limits_sweep(family, alpha, grid, cfg.numeric_max_m, cfg.restarts, cfg.seed)) {
                w.row({static_cast<std::int64_t>(row.m), row.alpha, optional_cell(row.dim_numeric), row.dim_exact,
                       row.dim_closed, row.limit});
            }
        }
        w.finish(meta_of(cfg));
        return exit_ok;
    }

    table_writer w(target.stream(),
                   {"m", "alpha", "tau_numeric", "dim_numeric", "dim_closed", "discrepancy", "convention_matched"},
                   cfg.format);
    bool ok = true;
    for (unsigned m = cfg.m; m <= cfg.m_hi; ++m) {
        for (const double alpha : cfg.alphas) {
            const auto op = family == tau_family::F1 ? averaging_op::mean_median(m, alpha) : averaging_op::median_midrange(m, alpha);
            const auto r = tau_minimize(op, cfg.restarts, 1e-10, cfg.seed);
            double closed = 0.0;
            std::string matched;
            if (family == tau_family::F1) {
                const double printed = tau_closed_form_F1(m, alpha, s_convention::printed).dim;
                const double swapped = tau_closed_form_F1(m, alpha, s_convention::swapped).dim;
                const bool p_ok = std::abs(r.dim - printed) <= 1e-6;
                const bool s_ok = std::abs(r.dim - swapped) <= 1e-6;
                matched = p_ok && s_ok ? "both" : p_ok ? "printed" : s_ok ? "swapped" : "none";
                closed = !p_ok && s_ok ? swapped : printed;
            } else {
                closed = tau_closed_form_F2(m, alpha).dim;
                matched = std::abs(r.dim - closed) <= 1e-6 ? "displayed" : "none";
            }
            const double discrepancy = std::abs(r.dim - closed);
            ok = ok && matched != "none" && r.constraint_residual <= 1e-9 && r.tau <= m + 1e-9;
            w.row({static_cast<std::int64_t>(m), alpha, r.tau, r.dim, closed, discrepancy, matched});
        }
    }
    w.finish(meta_of(cfg));
    return ok ? exit_ok : exit_violation;
}

inline int run_axioms(const run_config &cfg) {
    const auto op = parse_operator(cfg.op_spec, cfg.m);
    const double tol = cfg.tol.value_or(op.family() == op_family::p_average ? 1e-7 : 1e-9);
    const auto r = check_axioms(op, cfg.samples, cfg.range, cfg.seed, tol);
    output_target target(path_of(cfg));
    std::ostream &out = target.stream();
    out << "operator " << op.name() << " m=" << cfg.m << " samples=" << r.samples << " seed=" << cfg.seed
        << " tol=" << format_double(tol) << '\n';
    for (const auto &[key, ok] : r.passed) {
        out << "axiom " << key << ' ' << (ok ? "pass" : "FAIL") << " worst " << format_double(r.worst_violation.at(key)) << '\n';
    }
    out << "strictness failures " << r.strictness_failures << '\n';
    const auto kappa = contraction_constant(op);
    const auto eta = expansion_constant(op);
    out << "empirical kappa " << format_double(r.empirical_kappa);
    out << (kappa ? " closed form " + format_double(*kappa) : std::string(" (no closed form)")) << '\n';
    out << "empirical eta " << format_double(r.empirical_eta);
    out << (eta ? " closed form " + format_double(*eta) : std::string(" (no closed form)")) << '\n';
    out << "empirical b " << format_double(r.empirical_b) << '\n';
    if (op.family() == op_family::median_midrange) {
        out << "note: kappa = alpha + beta/2 for F2 is source-inconsistent, verify empirically; measured upper slope "
            << format_double(r.empirical_kappa) << (r.empirical_kappa <= *kappa + tol ? " is within" : " exceeds")
            << " it, measured lower slope " << format_double(r.empirical_eta) << '\n';
    }
    return r.all_passed() ? exit_ok : exit_violation;
}

inline int run_reproduce_all(const run_config &cfg) {
    acceptance::options opt;
    opt.seed = cfg.seed;
    opt.tau_restarts = cfg.restarts;
    const auto results = acceptance::run_all(opt, &std::cerr);
    output_target target(cfg.out);
    acceptance::print_report(results, target.stream());
    if (!cfg.csv.empty()) {
        output_target table(cfg.csv);
        table_writer w(table.stream(), {"criterion", "title", "status", "summary"}, table_format::csv);
        for (const auto &r : results) {
            w.row({static_cast<std::int64_t>(r.id), r.title, std::string(r.passed() ? "PASS" : "FAIL"), r.summary});
        }
        w.finish(meta_of(cfg));
    }
    return acceptance::all_passed(results) ? exit_ok : exit_violation;
}

}  // namespace detail

/// Executes a validated configuration: 0 success, 2 bound or invariant violation.
[[nodiscard]] inline int run(const run_config &cfg) {
    if (cfg.command == "solve") {
        return detail::run_solve(cfg);
    }
    if (cfg.command == "measure") {
        return detail::run_measure(cfg);
    }
    if (cfg.command == "bound" || cfg.command == "lower-bound") {
        return detail::run_bound(cfg);
    }
    if (cfg.command == "bcp") {
        return detail::run_bcp(cfg);
    }
    if (cfg.command == "ucp extract") {
        return detail::run_ucp_extract(cfg);
    }
    if (cfg.command == "ucp counterexample") {
        return detail::run_ucp_counterexample(cfg);
    }
    if (cfg.command == "ucp classify") {
        return detail::run_ucp_classify(cfg);
    }
    if (cfg.command == "tau") {
        return detail::run_tau(cfg);
    }
    if (cfg.command == "axioms") {
        return detail::run_axioms(cfg);
    }
    if (cfg.command == "reproduce-all") {
        return detail::run_reproduce_all(cfg);
    }
    throw usage_error("unknown command '" + cfg.command + "'");
}

/// parse_args + run with errors mapped to exit code 1.
inline int main_entry(int argc, char **argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(parse_args(args));
    } catch (const help_requested &h) {
        std::cout << h.text;
        return exit_ok;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
}

}  // namespace treeharmonic::cli
