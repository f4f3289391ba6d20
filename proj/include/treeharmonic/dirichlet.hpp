#pragma once

/**
 * @file dirichlet.hpp
 * @brief Boundary data, the level-n discretization f_n, and the bottom-up
 * solver for the discretized Dirichlet problem.
 *
 * Data at level n is sampled at left endpoints, f_n(j / m^n). The solution u_n
 * is stored as level arrays levels[0..n]; below level n it is constant on
 * subtrees, so nothing deeper is stored.
 */

#include "error.hpp"
#include "operators.hpp"
#include "parallel.hpp"
#include "scalar.hpp"
#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace treeharmonic {

/// Largest level array a solve will allocate.
inline constexpr std::uint64_t max_solve_level_size = std::uint64_t{1} << 25U;

class boundary_data;

namespace boundary {

struct constant {
    double value = 0.0;
};

/// f(t) = t.
struct identity {};

/// f(t) = sin(2 pi freq t).
struct sine {
    double freq = 1.0;
};

/// height on the cells of I (half-open, last cell closed), 0 elsewhere.
struct indicator {
    madic_union cells;
    double height = 1.0;
};

/// Piecewise-linear interpolation of sorted (t, value) nodes; constant outside the node range.
struct table {
    std::vector<double> t;
    std::vector<double> value;
    std::optional<double> lipschitz;
};

/// base + c * chi_I.
struct composite {
    std::shared_ptr<const boundary_data> base;
    madic_union cells;
    double c = 0.0;
};

}  // namespace boundary

class boundary_data {
public:
    using source_type = std::variant<boundary::constant, boundary::identity, boundary::sine, boundary::indicator,
                                     boundary::table, boundary::composite>;

    boundary_data() : source_{boundary::constant{}} {}
    boundary_data(source_type source) : source_{std::move(source)} {}  // NOLINT(google-explicit-constructor)

    static boundary_data constant(double value) { return boundary_data(boundary::constant{value}); }
    static boundary_data identity() { return boundary_data(boundary::identity{}); }
    static boundary_data sine(double freq) { return boundary_data(boundary::sine{freq}); }
    static boundary_data indicator(madic_union cells, double height = 1.0) {
        return boundary_data(boundary::indicator{cells, height});
    }
    static boundary_data table(std::vector<double> t, std::vector<double> value, std::optional<double> lipschitz = {}) {
        validate_table(t, value);
        return boundary_data(boundary::table{std::move(t), std::move(value), lipschitz});
    }

    /// f + c * chi_I.
    [[nodiscard]] boundary_data plus_indicator(const madic_union &cells, double c) const {
        return boundary_data(boundary::composite{std::make_shared<const boundary_data>(*this), cells, c});
    }

    [[nodiscard]] const source_type &source() const noexcept { return source_; }

    /// Known Lipschitz constant, when one exists (indicators have none).
    [[nodiscard]] std::optional<double> lipschitz_constant() const {
        return std::visit(
            [](const auto &s) -> std::optional<double> {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, boundary::constant>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<S, boundary::identity>) {
                    return 1.0;
                } else if constexpr (std::is_same_v<S, boundary::sine>) {
                    return 2.0 * std::numbers::pi * std::abs(s.freq);
                } else if constexpr (std::is_same_v<S, boundary::table>) {
                    return s.lipschitz;
                } else {
                    return std::nullopt;
                }
            },
            source_);
    }

    /// f(t) for t in [0, 1].
    [[nodiscard]] double operator()(double t) const {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw domain_error("boundary data evaluated outside [0, 1]");
        }
        return std::visit(
            [t](const auto &s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, boundary::constant>) {
                    return s.value;
                } else if constexpr (std::is_same_v<S, boundary::identity>) {
                    return t;
                } else if constexpr (std::is_same_v<S, boundary::sine>) {
                    return std::sin(2.0 * std::numbers::pi * s.freq * t);
                } else if constexpr (std::is_same_v<S, boundary::indicator>) {
                    return contains_point(s.cells, t) ? s.height : 0.0;
                } else if constexpr (std::is_same_v<S, boundary::table>) {
                    return interpolate(s, t);
                } else {
                    return (*s.base)(t) + (contains_point(s.cells, t) ? s.c : 0.0);
                }
            },
            source_);
    }

    /// f(j / m^n); membership in m-adic cells is decided on integers, never on rounded t.
    [[nodiscard]] double at_grid(std::uint64_t j, unsigned n, unsigned m) const {
        return std::visit(
            [&](const auto &s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, boundary::constant>) {
                    return s.value;
                } else if constexpr (std::is_same_v<S, boundary::indicator>) {
                    return contains_grid(s.cells, j, n, m) ? s.height : 0.0;
                } else if constexpr (std::is_same_v<S, boundary::composite>) {
                    return s.base->at_grid(j, n, m) + (contains_grid(s.cells, j, n, m) ? s.c : 0.0);
                } else {
                    return (*this)(static_cast<double>(j) / static_cast<double>(level_size(m, n)));
                }
            },
            source_);
    }

    [[nodiscard]] std::string describe() const {
        return std::visit(
            [](const auto &s) -> std::string {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, boundary::constant>) {
                    return "const:" + format_double(s.value);
                } else if constexpr (std::is_same_v<S, boundary::identity>) {
                    return "id";
                } else if constexpr (std::is_same_v<S, boundary::sine>) {
                    return "sin:" + format_double(s.freq);
                } else if constexpr (std::is_same_v<S, boundary::indicator>) {
                    return "indicator:" + s.cells.to_string() + ":" + format_double(s.height);
                } else if constexpr (std::is_same_v<S, boundary::table>) {
                    return "table[" + std::to_string(s.t.size()) + "]";
                } else {
                    return s.base->describe() + "+" + format_double(s.c) + "*chi(" + s.cells.to_string() + ")";
                }
            },
            source_);
    }

private:
    static bool contains_grid(const madic_union &cells, std::uint64_t j, unsigned n, unsigned m) {
        if (cells.m != m) {
            throw domain_error("indicator cells and sampling grid use different m");
        }
        if (n >= cells.level) {
            return cells.contains_cell(n, j);
        }
        return cells.contains_cell(cells.level, j * level_size(m, cells.level - n));
    }

    static bool contains_point(const madic_union &cells, double t) {
        const rational exact(t);
        if (t == 1.0) {
            return cells.touches_right();
        }
        return exact >= cells.left_exact() && exact < cells.right_exact();
    }

    static void validate_table(const std::vector<double> &t, const std::vector<double> &value) {
        if (t.empty() || t.size() != value.size()) {
            throw input_error("boundary table needs matching, non-empty t and value columns");
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!std::isfinite(t[i]) || !std::isfinite(value[i]) || t[i] < 0.0 || t[i] > 1.0) {
                throw input_error("boundary table row " + std::to_string(i + 1) + " is outside [0, 1] or not finite");
            }
            if (i > 0 && !(t[i] > t[i - 1])) {
                throw input_error("boundary table t column must be strictly increasing");
            }
        }
    }

    static double interpolate(const boundary::table &s, double t) {
        if (t <= s.t.front()) {
            return s.value.front();
        }
        if (t >= s.t.back()) {
            return s.value.back();
        }
        const auto upper = std::upper_bound(s.t.begin(), s.t.end(), t);
        const auto i = static_cast<std::size_t>(upper - s.t.begin());
        const double w = (t - s.t[i - 1]) / (s.t[i] - s.t[i - 1]);
        return s.value[i - 1] + w * (s.value[i] - s.value[i - 1]);
    }

    source_type source_;
};

/// Reads "t,value" rows; '#' lines are comments, "# L=<value>" sets the Lipschitz constant.
[[nodiscard]] inline boundary_data read_boundary_table(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw input_error("cannot open boundary table '" + path + "'");
    }
    std::vector<double> t;
    std::vector<double> value;
    std::optional<double> lipschitz;
    std::string line;
    unsigned line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            if (const auto pos = line.find("L="); pos != std::string::npos) {
                try {
                    lipschitz = std::stod(line.substr(pos + 2));
                } catch (const std::exception &) {
                    throw input_error(path + ":" + std::to_string(line_no) + ": malformed Lipschitz header");
                }
            }
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw input_error(path + ":" + std::to_string(line_no) + ": expected 't,value'");
        }
        try {
            std::size_t used_t = 0;
            std::size_t used_v = 0;
            const std::string ts = line.substr(0, comma);
            const std::string vs = line.substr(comma + 1);
            t.push_back(std::stod(ts, &used_t));
            value.push_back(std::stod(vs, &used_v));
            if (used_t != ts.size() || vs.find_first_not_of(" \r\t", used_v) != std::string::npos) {
                throw input_error("trailing characters");
            }
        } catch (const std::exception &) {
            throw input_error(path + ":" + std::to_string(line_no) + ": expected two numbers 't,value'");
        }
    }
    return boundary_data::table(std::move(t), std::move(value), lipschitz);
}

/// Parses "id", "const:<v>", "sin:<freq>", "indicator:<n:k0..k1>[:height]" or "table:<path>".
[[nodiscard]] inline boundary_data parse_boundary(std::string_view text, unsigned m) {
    const auto number = [&](std::string_view s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(std::string(s), &used);
            if (used != s.size() || !std::isfinite(v)) {
                throw input_error("");
            }
            return v;
        } catch (const std::exception &) {
            throw input_error("malformed number '" + std::string(s) + "' in boundary data '" + std::string(text) + "'");
        }
    };
    if (text == "id" || text == "identity") {
        return boundary_data::identity();
    }
    const auto colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    if (head == "const" && !rest.empty()) {
        return boundary_data::constant(number(rest));
    }
    if (head == "sin" && !rest.empty()) {
        return boundary_data::sine(number(rest));
    }
    if (head == "table" && !rest.empty()) {
        return read_boundary_table(std::string(rest));
    }
    if (head == "indicator" && !rest.empty()) {
        const auto second = rest.find(':');
        const auto third = rest.find(':', second + 1);
        const std::string_view cells = rest.substr(0, third);
        const double height = third == std::string_view::npos ? 1.0 : number(rest.substr(third + 1));
        return boundary_data::indicator(parse_cells(cells, m), height);
    }
    throw input_error("unknown boundary data '" + std::string(text) +
                      "' (expected id, const:<v>, sin:<freq>, indicator:<n:k0..k1>[:h], table:<path>)");
}

inline std::uint64_t checked_solve_size(unsigned m, unsigned n) {
    const std::uint64_t size = level_size(m, n);
    if (size > max_solve_level_size) {
        throw capacity_error("level " + std::to_string(n) + " of the " + std::to_string(m) +
                             "-ary tree has more vertices than a solve stores (limit 2^25)");
    }
    return size;
}

/// f_n: entry j is f(j / m^n).
[[nodiscard]] inline std::vector<double> sample_boundary(const boundary_data &f, unsigned n, unsigned m) {
    const std::uint64_t size = checked_solve_size(m, n);
    std::vector<double> out(size);
    parallel_for(size, [&](std::size_t j) { out[j] = f.at_grid(j, n, m); });
    return out;
}

/// Values on levels 0..n; levels[k] has m^k entries in digit order.
template <tree_scalar T = double>
struct tree_solution {
    unsigned m = 3;
    unsigned depth = 0;
    std::vector<std::vector<T>> levels;

    [[nodiscard]] const T &root() const { return levels.front().front(); }
    [[nodiscard]] const std::vector<T> &boundary() const { return levels.back(); }

    [[nodiscard]] const T &at(unsigned level, std::uint64_t index) const { return levels.at(level).at(index); }

    /// Value at any vertex; below level n the value of the level-n ancestor.
    [[nodiscard]] const T &at(const vertex_path &x) const {
        if (x.level() <= depth) {
            return levels[x.level()][level_index(x, m)];
        }
        return levels[depth][level_index(x.prefix(depth), m)];
    }

    /// max over interior vertices of |u(x) - F(children)|.
    [[nodiscard]] T harmonicity_residual(const averaging_op &op) const {
        if (op.arity() != m) {
            throw arity_error("operator arity does not match the tree");
        }
        T worst(0);
        for (unsigned k = 0; k < depth; ++k) {
            const auto &parents = levels[k];
            const auto &children = levels[k + 1];
            std::vector<T> residual(parents.size());
            parallel_for(parents.size(), [&](std::size_t i) {
                const std::span<const T> kids(children.data() + i * m, m);
                residual[i] = abs_value<T>(T(parents[i] - op(kids)));
            }, 1024);
            for (const auto &r : residual) {
                if (r > worst) {
                    worst = r;
                }
            }
        }
        return worst;
    }
};

namespace detail {

inline unsigned depth_of(std::size_t size, unsigned m) {
    unsigned n = 0;
    std::size_t s = size;
    while (s > 1 && s % m == 0) {
        s /= m;
        ++n;
    }
    if (s != 1) {
        throw precondition_error("boundary of length " + std::to_string(size) + " is not a power of m = " +
                                 std::to_string(m));
    }
    return n;
}

}  // namespace detail

/// u_n from level-n data: each interior value is F of its m children.
template <tree_scalar T>
[[nodiscard]] tree_solution<T> solve(const averaging_op &op, std::vector<T> boundary) {
    const unsigned m = op.arity();
    const unsigned n = detail::depth_of(boundary.size(), m);
    (void) checked_solve_size(m, n);
    tree_solution<T> u{m, n, std::vector<std::vector<T>>(n + 1)};
    u.levels[n] = std::move(boundary);
    for (unsigned k = n; k > 0; --k) {
        const auto &children = u.levels[k];
        auto &parents = u.levels[k - 1];
        parents.resize(children.size() / m);
        parallel_for(parents.size(), [&](std::size_t i) {
            parents[i] = op(std::span<const T>(children.data() + i * m, m));
        }, 1024);
    }
    return u;
}

[[nodiscard]] inline tree_solution<double> solve(const averaging_op &op, const boundary_data &f, unsigned n) {
    return solve<double>(op, sample_boundary(f, n, op.arity()));
}

/// New value for one level-n boundary cell.
struct boundary_edit {
    std::uint64_t index = 0;
    double value = 0.0;
};

/**
 * Root of the solve whose data equals base.boundary() except at the edited
 * cells. Only ancestors of edited cells are recomputed, so the cost is
 * O(edits * n * m) instead of a full sweep.
 */
[[nodiscard]] inline double resolve_root_with_edits(const averaging_op &op, const tree_solution<double> &base,
                                                    std::vector<boundary_edit> edits) {
    const unsigned m = base.m;
    if (edits.empty()) {
        return base.root();
    }
    std::sort(edits.begin(), edits.end(), [](const auto &a, const auto &b) { return a.index < b.index; });
    std::vector<double> kids(m);
    for (unsigned k = base.depth; k > 0; --k) {
        const auto &level = base.levels[k];
        std::vector<boundary_edit> parents;
        std::size_t i = 0;
        while (i < edits.size()) {
            if (edits[i].index >= level.size()) {
                throw domain_error("edited cell outside the level");
            }
            const std::uint64_t parent = edits[i].index / m;
            const std::uint64_t first = parent * m;
            std::copy_n(level.begin() + static_cast<std::ptrdiff_t>(first), m, kids.begin());
            while (i < edits.size() && edits[i].index / m == parent) {
                kids[edits[i].index - first] = edits[i].value;
                ++i;
            }
            parents.push_back({parent, op(std::span<const double>(kids))});
        }
        edits = std::move(parents);
    }
    return edits.front().value;
}

/// c added to every level-(base.depth) cell inside I.
[[nodiscard]] inline std::vector<boundary_edit> indicator_edits(const tree_solution<double> &base, const madic_union &cells,
                                                                double c) {
    if (cells.m != base.m) {
        throw domain_error("cells and solution use different m");
    }
    if (cells.level > base.depth) {
        throw domain_error("cells lie below the solution's data level");
    }
    const madic_union fine = cells.refined(base.depth);
    std::vector<boundary_edit> edits;
    edits.reserve(fine.cell_count());
    for (std::uint64_t j = fine.k0; j <= fine.k1; ++j) {
        edits.push_back({j, base.boundary()[j] + c});
    }
    return edits;
}

struct refine_result {
    double root_value = 0.0;
    unsigned n_used = 0;
    double error_bound = 0.0;
    /// True when error_bound is the Lipschitz bound L / m^n, false for the consecutive-depth heuristic.
    bool certified = false;
};

/**
 * With a Lipschitz constant L: the least n >= 1 with L / m^n <= eps. Without:
 * increases n until |u_n(root) - u_{n+1}(root)| <= eps and reports that gap.
 */
[[nodiscard]] inline refine_result refine_until(const averaging_op &op, const boundary_data &f, double target_eps,
                                                unsigned max_n) {
    if (!(target_eps > 0.0)) {
        throw domain_error("target accuracy must be positive");
    }
    const unsigned m = op.arity();
    if (const auto L = f.lipschitz_constant()) {
        unsigned n = 1;
        while (*L / static_cast<double>(level_size(m, n)) > target_eps) {
            if (n >= max_n) {
                const double value = solve(op, f, n).root();
                throw convergence_error("Lipschitz bound needs more than " + std::to_string(max_n) + " levels", value,
                                        *L / static_cast<double>(level_size(m, n)));
            }
            ++n;
        }
        return {solve(op, f, n).root(), n, *L / static_cast<double>(level_size(m, n)), true};
    }
    double previous = solve(op, f, 1).root();
    double gap = 0.0;
    for (unsigned n = 1; n < max_n; ++n) {
        const double next = solve(op, f, n + 1).root();
        gap = std::abs(next - previous);
        if (gap <= target_eps) {
            return {previous, n, gap, false};
        }
        previous = next;
    }
    throw convergence_error("consecutive depths still differ after " + std::to_string(max_n) + " levels", previous, gap);
}

/**
 * sup over stored vertices of (u - v) minus sup over the boundary of (u - v).
 * The comparison principle says this is 0 up to solver tolerance.
 */
template <tree_scalar T>
[[nodiscard]] T comparison_check(const tree_solution<T> &u, const tree_solution<T> &v) {
    if (u.m != v.m || u.depth != v.depth) {
        throw precondition_error("comparison needs solutions of the same shape");
    }
    const auto level_max = [&](unsigned k) {
        T best = u.levels[k][0] - v.levels[k][0];
        for (std::size_t i = 1; i < u.levels[k].size(); ++i) {
            const T d = u.levels[k][i] - v.levels[k][i];
            if (d > best) {
                best = d;
            }
        }
        return best;
    };
    const T on_boundary = level_max(u.depth);
    T overall = on_boundary;
    for (unsigned k = 0; k < u.depth; ++k) {
        const T d = level_max(k);
        if (d > overall) {
            overall = d;
        }
    }
    return overall - on_boundary;
}

}  // namespace treeharmonic
