#pragma once

/**
 * @file ucp.hpp
 * @brief Unique continuation on vertex sets U: rho profiles, the series
 * sum delta^rho_k, and the explicit bounded F-harmonic function that vanishes
 * on U without vanishing identically.
 *
 * With eta_0 = 0 and eta_k = rho_1 + ... + rho_k, stage k starts from the
 * level-eta_(k-1) vertices that are neither in U nor below an earlier hit
 * (the set A_k). Each of them must have exactly one U vertex below it at
 * level eta_k; rho_k is the least depth gap to such a hit.
 */

#include "dirichlet.hpp"
#include "error.hpp"
#include "operators.hpp"
#include "scalar.hpp"
#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace treeharmonic {

struct rho_profile {
    std::vector<unsigned> rho;
    std::vector<unsigned> eta;
    bool p1_ok = false;
    bool p2_ok = false;
    /// Every level up to max_depth has a non-U vertex and psi(U) meets every cell of level floor(log_m |U|).
    bool p0_density_ok = false;
    double delta = 0.0;
    unsigned max_depth = 0;
    /// First violation found, empty when none.
    std::string witness;
    /// Free-form remarks ("no hits to depth 4", truncation).
    std::string note;
};

namespace detail {

using level_sets = std::map<unsigned, std::unordered_set<std::uint64_t>>;

inline level_sets index_by_level(const std::vector<vertex_path> &U, unsigned m, unsigned max_depth) {
    level_sets out;
    for (const auto &x : U) {
        if (x.level() >= 1 && x.level() <= max_depth) {
            out[x.level()].insert(level_index(x, m));
        }
    }
    return out;
}

inline bool in_set(const level_sets &sets, unsigned level, std::uint64_t index) {
    const auto it = sets.find(level);
    return it != sets.end() && it->second.count(index) != 0;
}

}  // namespace detail

/**
 * rho_k for k = 1, 2, ... while eta_k <= max_depth, with (P1), (P2) and the
 * finite-depth density check. Stage sets A_k are enumerated explicitly, so
 * eta_(k-1) is limited by the solve storage cap.
 */
[[nodiscard]] inline rho_profile extract_rho(const std::vector<vertex_path> &U, unsigned m, unsigned max_depth,
                                             const averaging_op &op) {
    if (op.arity() != m) {
        throw arity_error("operator arity does not match m");
    }
    (void) level_size(m, max_depth);
    rho_profile profile;
    profile.delta = delta(op);
    profile.max_depth = max_depth;
    const auto sets = detail::index_by_level(U, m, max_depth);

    // density: a free vertex at every level, and psi(U) meets every cell of level floor(log_m |U|)
    {
        bool ok = !U.empty();
        for (unsigned k = 1; ok && k <= max_depth; ++k) {
            const auto it = sets.find(k);
            if (it != sets.end() && it->second.size() >= level_size(m, k)) {
                ok = false;
                profile.witness = "level " + std::to_string(k) + " lies entirely in U";
            }
        }
        if (ok) {
            unsigned L = 0;
            for (std::uint64_t size = m; size <= U.size(); size *= m) {
                ++L;
            }
            std::vector<char> hit(level_size(m, std::min(L, max_depth)), 0);
            const unsigned level = std::min(L, max_depth);
            for (const auto &x : U) {
                const std::uint64_t index = level_index(x, m);
                const std::uint64_t cell = x.level() >= level ? index / level_size(m, x.level() - level)
                                                              : index * level_size(m, level - x.level());
                hit[cell] = 1;
            }
            const auto missing = std::find(hit.begin(), hit.end(), 0);
            if (missing != hit.end()) {
                ok = false;
                profile.witness = "psi(U) misses cell " + std::to_string(missing - hit.begin()) + " of level " +
                                  std::to_string(level);
            }
        }
        profile.p0_density_ok = ok;
    }

    if (sets.empty()) {
        profile.note = "no hits to depth " + std::to_string(max_depth);
        return profile;
    }

    // rho_1 and (P1)
    const auto &[first_level, first_hits] = *sets.begin();
    profile.rho.push_back(first_level);
    profile.eta.push_back(first_level);
    profile.p1_ok = first_hits.size() == 1;
    profile.p2_ok = true;
    if (!profile.p1_ok && profile.witness.empty()) {
        profile.witness = std::to_string(first_hits.size()) + " vertices of U at level " + std::to_string(first_level);
    }

    // alive[i]: level-eta vertex i is not in U and not below an earlier hit
    std::vector<char> alive(level_size(m, first_level), 1);
    for (const auto i : first_hits) {
        alive[i] = 0;
    }

    while (true) {
        const unsigned eta = profile.eta.back();
        if (eta >= max_depth) {
            break;
        }
        // least depth gap from a non-U level-eta vertex to a U vertex below it
        std::optional<unsigned> gap;
        for (const auto &[level, hits] : sets) {
            if (level <= eta) {
                continue;
            }
            const std::uint64_t scale = level_size(m, level - eta);
            for (const auto i : hits) {
                if (!detail::in_set(sets, eta, i / scale)) {
                    gap = level - eta;
                    break;
                }
            }
            if (gap) {
                break;
            }
        }
        if (!gap) {
            profile.note = "no further hits to depth " + std::to_string(max_depth);
            break;
        }
        const unsigned next = eta + *gap;
        (void) checked_solve_size(m, next);

        // (P2): every vertex of A_k has exactly one hit at level eta + rho_k below it
        std::unordered_map<std::uint64_t, unsigned> hits_below;
        const std::uint64_t scale = level_size(m, *gap);
        if (const auto it = sets.find(next); it != sets.end()) {
            for (const auto i : it->second) {
                ++hits_below[i / scale];
            }
        }
        for (std::uint64_t y = 0; y < alive.size(); ++y) {
            if (!alive[y]) {
                continue;
            }
            const auto it = hits_below.find(y);
            const unsigned count = it == hits_below.end() ? 0 : it->second;
            if (count != 1) {
                if (profile.p2_ok && profile.witness.empty()) {
                    profile.witness = "vertex " + path_at(eta, y, m).to_string(m) + " has " + std::to_string(count) +
                                      " hits at level " + std::to_string(next);
                }
                profile.p2_ok = false;
            }
        }
        profile.rho.push_back(*gap);
        profile.eta.push_back(next);

        std::vector<char> next_alive(level_size(m, next));
        for (std::uint64_t i = 0; i < next_alive.size(); ++i) {
            next_alive[i] = alive[i / scale] && !detail::in_set(sets, next, i);
        }
        alive = std::move(next_alive);
    }
    return profile;
}

/// One vertex per line as a digit string ("0212", or comma separated for m > 10); '#' starts a comment.
[[nodiscard]] inline std::vector<vertex_path> parse_vertex_list(std::istream &in, unsigned m) {
    std::vector<vertex_path> out;
    std::string line;
    unsigned line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); }), line.end());
        if (line.empty()) {
            continue;
        }
        std::vector<unsigned> digits;
        if (line.find(',') != std::string::npos || m > 10) {
            std::size_t start = 0;
            while (start <= line.size()) {
                const auto comma = std::min(line.find(',', start), line.size());
                digits.push_back(static_cast<unsigned>(detail::parse_unsigned(std::string_view(line).substr(start, comma - start), "digit")));
                start = comma + 1;
            }
        } else {
            for (const char ch : line) {
                if (ch < '0' || ch > '9') {
                    throw input_error("line " + std::to_string(line_no) + ": '" + line + "' is not a digit string");
                }
                digits.push_back(static_cast<unsigned>(ch - '0'));
            }
        }
        vertex_path x(std::move(digits));
        try {
            x.validate(m);
        } catch (const domain_error &e) {
            throw input_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(std::move(x));
    }
    return out;
}

[[nodiscard]] inline std::vector<vertex_path> read_vertex_file(const std::string &path, unsigned m) {
    std::ifstream in(path);
    if (!in) {
        throw input_error("cannot open vertex set file '" + path + "'");
    }
    return parse_vertex_list(in, m);
}

namespace detail {

inline void require_unit_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw domain_error("delta must lie in (0, 1)");
    }
}

}  // namespace detail

/// sum_k delta^rho_k over the given profile.
[[nodiscard]] inline double series_partial(double delta, const std::vector<unsigned> &rho) {
    detail::require_unit_delta(delta);
    double sum = 0.0;
    for (const unsigned r : rho) {
        sum += std::pow(delta, r);
    }
    return sum;
}

/// prod_i 1 / (1 - delta^rho_i).
template <tree_scalar T>
[[nodiscard]] T mk_product(const T &delta, const std::vector<unsigned> &rho) {
    if (!(delta > T(0) && delta < T(1))) {
        throw domain_error("delta must lie in (0, 1)");
    }
    T product(1);
    for (const unsigned r : rho) {
        product /= T(1) - ipow(delta, r);
    }
    return product;
}

enum class ucp_verdict { holds, fails, inconclusive };

[[nodiscard]] inline std::string to_string(ucp_verdict v) {
    switch (v) {
        case ucp_verdict::holds: return "UCP_holds";
        case ucp_verdict::fails: return "UCP_fails";
        default: return "inconclusive";
    }
}

/// Declared parametric profile: constant rho, rho_k = a k + b, or any sequence with a declared finite lim sup.
struct rho_pattern {
    enum class kind { constant, linear, bounded } shape = kind::constant;
    double a = 0.0;
    double b = 1.0;

    static rho_pattern constant(unsigned rho) { return {kind::constant, 0.0, static_cast<double>(rho)}; }
    static rho_pattern linear(double a, double b) { return {kind::linear, a, b}; }
    static rho_pattern bounded(double limsup) { return {kind::bounded, 0.0, limsup}; }

    [[nodiscard]] unsigned term(unsigned k) const {
        switch (shape) {
            case kind::linear: return static_cast<unsigned>(std::llround(a * k + b));
            default: return static_cast<unsigned>(b);
        }
    }
};

/**
 * Verdict for a declared pattern: a bounded profile keeps delta^rho_k away
 * from 0, so the series diverges and UCP holds; a linear profile with a > 0
 * gives a convergent geometric series, so UCP fails.
 */
[[nodiscard]] inline ucp_verdict classify_pattern(double delta, const rho_pattern &pattern) {
    detail::require_unit_delta(delta);
    switch (pattern.shape) {
        case rho_pattern::kind::constant:
        case rho_pattern::kind::bounded:
            if (!(pattern.b >= 1.0)) {
                throw domain_error("rho values must be at least 1");
            }
            return ucp_verdict::holds;
        case rho_pattern::kind::linear:
            if (pattern.a < 0.0 || pattern.a + pattern.b < 1.0) {
                throw domain_error("linear pattern must have a >= 0 and rho_1 = a + b >= 1");
            }
            return pattern.a > 0.0 ? ucp_verdict::fails : ucp_verdict::holds;
    }
    return ucp_verdict::inconclusive;
}

/// A raw finite profile decides nothing; the partial sum is reported alongside.
[[nodiscard]] inline ucp_verdict classify_profile(double delta, const std::vector<unsigned> &rho) {
    detail::require_unit_delta(delta);
    (void) rho;
    return ucp_verdict::inconclusive;
}

/**
 * Canonical U for a rho profile: stage k appends rho_k digits m-1 to every
 * vertex of A_k. Listed stage by stage in index order.
 */
[[nodiscard]] inline std::vector<vertex_path> canonical_u_set(unsigned m, const std::vector<unsigned> &rho) {
    std::vector<vertex_path> U;
    std::vector<char> alive(1, 1);
    unsigned eta = 0;
    for (const unsigned r : rho) {
        if (r < 1) {
            throw domain_error("rho values must be at least 1");
        }
        const unsigned next = eta + r;
        const std::uint64_t scale = level_size(m, r);
        (void) checked_solve_size(m, next);
        std::vector<char> next_alive(level_size(m, next), 0);
        for (std::uint64_t y = 0; y < alive.size(); ++y) {
            if (!alive[y]) {
                continue;
            }
            const std::uint64_t hit = y * scale + (scale - 1);
            U.push_back(path_at(next, hit, m));
            for (std::uint64_t i = y * scale; i < (y + 1) * scale; ++i) {
                next_alive[i] = i != hit;
            }
        }
        alive = std::move(next_alive);
        eta = next;
    }
    return U;
}

template <tree_scalar T>
struct counterexample {
    tree_solution<T> u;
    std::vector<unsigned> rho;
    std::vector<unsigned> eta;
    std::vector<vertex_path> hits;
    T delta;
    /// max of u over level eta_k, and prod_(i<=k) 1 / (1 - delta^rho_i).
    std::vector<T> level_max;
    std::vector<T> mk;
    T residual;
    /// u vanishes on every hit and on the levels below it that are stored.
    bool vanishes_on_u = false;
};

/**
 * The bounded F-harmonic function with u(root) = 1 that vanishes on the
 * canonical U. In stage k, with P = prod_(i<k) M_i and M_k = 1/(1 - delta^rho_k):
 * the chain vertex i steps below a stage root has value P (1 - delta^(rho_k - i)) M_k,
 * its off-chain children start subtrees of constant value P M_k, and the chain
 * ends at a hit with value 0 whose whole subtree is 0. Harmonicity follows from
 * F(M, ..., M, v) = v + (M - v)(1 - delta) for v <= M.
 */
template <tree_scalar T>
[[nodiscard]] counterexample<T> build_counterexample(const averaging_op &op, const std::vector<unsigned> &rho,
                                                     unsigned depth) {
    if (!op.permutation_invariant()) {
        throw unsupported_operator_error("the construction needs a permutation-invariant operator");
    }
    if (rho.empty()) {
        throw domain_error("rho profile is empty");
    }
    const unsigned m = op.arity();
    counterexample<T> out;
    out.rho = rho;
    unsigned total = 0;
    for (const unsigned r : rho) {
        if (r < 1) {
            throw domain_error("rho values must be at least 1");
        }
        total += r;
        out.eta.push_back(total);
    }
    if (depth < total) {
        throw domain_error("depth " + std::to_string(depth) + " is above eta_K = " + std::to_string(total));
    }
    (void) checked_solve_size(m, depth);

    const T d = delta<T>(op);
    out.delta = d;
    if (!(d > T(0) && d < T(1))) {
        throw domain_error("delta must lie in (0, 1)");
    }

    enum : char { dead, flat, chain };
    std::vector<char> kind(1, chain);
    std::vector<T> value(1, T(1));
    out.u.m = m;
    out.u.depth = depth;
    out.u.levels.push_back(value);

    T product(1);
    std::size_t stage = 0;
    unsigned stage_start = 0;
    for (unsigned level = 0; level < depth; ++level) {
        const bool staged = stage < rho.size();
        const unsigned r = staged ? rho[stage] : 0;
        const unsigned pos = level - stage_start;
        const T big = staged ? product / (T(1) - ipow(d, r)) : product;
        // chain value one step further down the current stage
        const T chain_next = staged ? big * (T(1) - ipow(d, r - pos - 1)) : T(0);

        std::vector<char> next_kind(kind.size() * m);
        std::vector<T> next_value(kind.size() * m);
        parallel_for(kind.size(), [&](std::size_t i) {
            for (unsigned digit = 0; digit < m; ++digit) {
                const std::size_t child = i * m + digit;
                switch (kind[i]) {
                    case dead:
                        next_kind[child] = dead;
                        next_value[child] = T(0);
                        break;
                    case flat:
                        next_kind[child] = flat;
                        next_value[child] = value[i];
                        break;
                    default:
                        if (digit == m - 1) {
                            next_kind[child] = pos + 1 == r ? dead : chain;
                            next_value[child] = chain_next;
                        } else {
                            next_kind[child] = flat;
                            next_value[child] = big;
                        }
                }
            }
        }, 256);
        kind = std::move(next_kind);
        value = std::move(next_value);

        if (staged && pos + 1 == r) {
            product = big;
            ++stage;
            stage_start = level + 1;
            // flat vertices become the roots of the next stage
            if (stage < rho.size()) {
                for (auto &k : kind) {
                    if (k == flat) {
                        k = chain;
                    }
                }
            }
        }
        out.u.levels.push_back(value);
    }

    out.hits = canonical_u_set(m, rho);
    out.vanishes_on_u = true;
    for (const auto &x : out.hits) {
        for (unsigned below = x.level(); below <= depth; ++below) {
            const std::uint64_t first = level_index(x, m) * level_size(m, below - x.level());
            const std::uint64_t count = level_size(m, below - x.level());
            for (std::uint64_t i = first; i < first + count; ++i) {
                if (out.u.levels[below][i] != T(0)) {
                    out.vanishes_on_u = false;
                }
            }
        }
    }
    T running(1);
    for (std::size_t k = 0; k < rho.size(); ++k) {
        const auto &level = out.u.levels[out.eta[k]];
        out.level_max.push_back(*std::max_element(level.begin(), level.end()));
        running /= T(1) - ipow(d, rho[k]);
        out.mk.push_back(running);
    }
    out.residual = out.u.harmonicity_residual(op);
    return out;
}

}  // namespace treeharmonic
