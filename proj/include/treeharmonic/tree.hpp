#pragma once

/**
 * @file tree.hpp
 * @brief Vertex addressing on the directed m-ary tree and m-adic intervals.
 *
 * A vertex is a finite digit sequence (a_1, ..., a_k) with a_j in {0, ..., m-1};
 * the root is the empty sequence. Vertices are never materialized as a graph:
 * at level k the vertex (a_1, ..., a_k) has the integer index
 * sum_j a_j m^(k-j), and its boundary interval is
 * I_x = [index / m^k, (index + 1) / m^k].
 */

#include "error.hpp"
#include "scalar.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace treeharmonic {

/// Levels are capped so that m^n <= 2^40 (n log2 m <= 40).
inline constexpr std::uint64_t max_level_size = std::uint64_t{1} << 40U;

/// m^n, or capacity_error past the depth cap.
[[nodiscard]] inline std::uint64_t level_size(unsigned m, unsigned n) {
    if (m < 2) {
        throw domain_error("branching m must be at least 2");
    }
    std::uint64_t size = 1;
    for (unsigned k = 0; k < n; ++k) {
        if (size > max_level_size / m) {
            throw capacity_error("level " + std::to_string(n) + " of the " + std::to_string(m) +
                                 "-ary tree exceeds the depth cap (m^n <= 2^40)");
        }
        size *= m;
    }
    return size;
}

class vertex_path {
public:
    vertex_path() = default;
    explicit vertex_path(std::vector<unsigned> digits) : digits_{std::move(digits)} {}
    vertex_path(std::initializer_list<unsigned> digits) : digits_{digits} {}

    [[nodiscard]] unsigned level() const noexcept { return static_cast<unsigned>(digits_.size()); }
    [[nodiscard]] bool is_root() const noexcept { return digits_.empty(); }
    [[nodiscard]] const std::vector<unsigned> &digits() const noexcept { return digits_; }

    [[nodiscard]] vertex_path child(unsigned digit) const {
        vertex_path next = *this;
        next.digits_.push_back(digit);
        return next;
    }

    /// Ancestor at the given level (a prefix of the digits).
    [[nodiscard]] vertex_path prefix(unsigned level) const {
        return vertex_path(std::vector<unsigned>(digits_.begin(), digits_.begin() + std::min<std::size_t>(level, digits_.size())));
    }

    void validate(unsigned m) const {
        for (const unsigned d : digits_) {
            if (d >= m) {
                throw domain_error("digit " + std::to_string(d) + " is not below m = " + std::to_string(m));
            }
        }
    }

    /// Digits as text: "0112" for m <= 10, comma separated otherwise; "()" for the root.
    [[nodiscard]] std::string to_string(unsigned m = 10) const {
        if (digits_.empty()) {
            return "()";
        }
        std::string out;
        for (std::size_t i = 0; i < digits_.size(); ++i) {
            if (m > 10 && i > 0) {
                out += ',';
            }
            out += m > 10 ? std::to_string(digits_[i]) : std::string(1, static_cast<char>('0' + digits_[i]));
        }
        return out;
    }

    friend bool operator==(const vertex_path &, const vertex_path &) = default;
    friend auto operator<=>(const vertex_path &, const vertex_path &) = default;

private:
    std::vector<unsigned> digits_;
};

/// Index of x among the m^k vertices of its level (digit order = boundary order).
[[nodiscard]] inline std::uint64_t level_index(const vertex_path &x, unsigned m) {
    x.validate(m);
    (void) level_size(m, x.level());
    std::uint64_t index = 0;
    for (const unsigned d : x.digits()) {
        index = index * m + d;
    }
    return index;
}

[[nodiscard]] inline vertex_path path_at(unsigned level, std::uint64_t index, unsigned m) {
    if (index >= level_size(m, level)) {
        throw domain_error("vertex index outside its level");
    }
    std::vector<unsigned> digits(level);
    for (unsigned k = level; k > 0; --k) {
        digits[k - 1] = static_cast<unsigned>(index % m);
        index /= m;
    }
    return vertex_path(std::move(digits));
}

/// psi(x) = sum_j a_j m^-j as an exact fraction.
[[nodiscard]] inline rational psi_exact(const vertex_path &x, unsigned m) {
    x.validate(m);
    rational value(0);
    rational weight(1);
    for (const unsigned d : x.digits()) {
        weight /= m;
        value += weight * d;
    }
    return value;
}

/// psi(x); exact index / m^k (rounded once) below the cap, left-to-right double accumulation beyond it.
[[nodiscard]] inline double psi(const vertex_path &x, unsigned m) {
    x.validate(m);
    if (x.level() <= 30) {
        try {
            const std::uint64_t size = level_size(m, x.level());
            return static_cast<double>(level_index(x, m)) / static_cast<double>(size);
        } catch (const capacity_error &) {
        }
    }
    double value = 0.0;
    double weight = 1.0;
    for (const unsigned d : x.digits()) {
        weight /= m;
        value += d * weight;
    }
    return value;
}

/// I_x = [psi(x), psi(x) + m^-k].
[[nodiscard]] inline std::pair<double, double> interval_of(const vertex_path &x, unsigned m) {
    const rational left = psi_exact(x, m);
    rational width(1);
    for (unsigned k = 0; k < x.level(); ++k) {
        width /= m;
    }
    return {to_double(left), to_double(rational(left + width))};
}

[[nodiscard]] inline std::vector<vertex_path> successors(const vertex_path &x, unsigned m) {
    std::vector<vertex_path> out;
    out.reserve(m);
    for (unsigned d = 0; d < m; ++d) {
        out.push_back(x.child(d));
    }
    return out;
}

/**
 * Union of consecutive level-n cells, [k0 / m^n, (k1 + 1) / m^n].
 */
struct madic_union {
    unsigned m = 3;
    unsigned level = 0;
    std::uint64_t k0 = 0;
    std::uint64_t k1 = 0;

    /// Validated constructor.
    static madic_union cells(unsigned m, unsigned level, std::uint64_t k0, std::uint64_t k1) {
        const std::uint64_t size = level_size(m, level);
        if (k0 > k1 || k1 >= size) {
            throw domain_error("cell range " + std::to_string(k0) + ".." + std::to_string(k1) + " invalid at level " +
                               std::to_string(level));
        }
        return madic_union{m, level, k0, k1};
    }

    static madic_union whole(unsigned m) { return madic_union{m, 0, 0, 0}; }

    [[nodiscard]] std::uint64_t cell_count() const noexcept { return k1 - k0 + 1; }

    [[nodiscard]] rational left_exact() const { return rational(k0) / rational(level_size(m, level)); }
    [[nodiscard]] rational right_exact() const { return rational(k1 + 1) / rational(level_size(m, level)); }

    /// |I| = (k1 - k0 + 1) / m^n.
    [[nodiscard]] double length() const {
        return static_cast<double>(cell_count()) / static_cast<double>(level_size(m, level));
    }

    [[nodiscard]] bool touches_left() const noexcept { return k0 == 0; }
    [[nodiscard]] bool touches_right() const { return k1 + 1 == level_size(m, level); }

    /// Same set expressed with cells of a deeper level.
    [[nodiscard]] madic_union refined(unsigned deeper) const {
        if (deeper < level) {
            throw domain_error("cannot refine to a coarser level");
        }
        const std::uint64_t factor = level_size(m, deeper - level);
        return cells(m, deeper, k0 * factor, (k1 + 1) * factor - 1);
    }

    /// Whether cell `index` of level `at_level` (>= level) lies inside the union.
    [[nodiscard]] bool contains_cell(unsigned at_level, std::uint64_t index) const {
        if (at_level < level) {
            throw domain_error("cell membership is defined only at or below the union's level");
        }
        const std::uint64_t ancestor = index / level_size(m, at_level - level);
        return ancestor >= k0 && ancestor <= k1;
    }

    /// Level-n cell vertices x_j whose intervals make up the union.
    [[nodiscard]] std::vector<vertex_path> vertices() const {
        std::vector<vertex_path> out;
        out.reserve(cell_count());
        for (std::uint64_t j = k0; j <= k1; ++j) {
            out.push_back(path_at(level, j, m));
        }
        return out;
    }

    [[nodiscard]] std::string to_string() const {
        return std::to_string(level) + ":" + std::to_string(k0) + ".." + std::to_string(k1);
    }

    friend bool operator==(const madic_union &, const madic_union &) = default;
};

struct madic_bracket {
    std::optional<madic_union> inner;
    madic_union outer;
};

namespace detail {

inline boost::multiprecision::cpp_int floor_div(const rational &x) {
    using boost::multiprecision::cpp_int;
    const cpp_int num = boost::multiprecision::numerator(x);
    const cpp_int den = boost::multiprecision::denominator(x);
    cpp_int q = num / den;
    if (num < 0 && q * den != num) {
        q -= 1;
    }
    return q;
}

inline boost::multiprecision::cpp_int ceil_div(const rational &x) {
    return -floor_div(rational(-x));
}

}  // namespace detail

/**
 * Level-n cell bracket of [a, b]: inner is the largest union of cells inside
 * [a, b] (absent when none fits), outer the smallest union covering it.
 */
[[nodiscard]] inline madic_bracket madic_cover(const rational &a, const rational &b, unsigned n, unsigned m) {
    if (!(a >= 0 && a < b && b <= 1)) {
        throw domain_error("madic_cover needs 0 <= a < b <= 1");
    }
    const std::uint64_t size = level_size(m, n);
    const rational scaled_a = a * size;
    const rational scaled_b = b * size;

    const auto outer_k0 = detail::floor_div(scaled_a).convert_to<std::uint64_t>();
    auto outer_end = detail::ceil_div(scaled_b).convert_to<std::uint64_t>();
    outer_end = std::min(outer_end, size);
    madic_bracket bracket{std::nullopt, madic_union::cells(m, n, outer_k0, outer_end - 1)};

    const auto inner_k0 = detail::ceil_div(scaled_a).convert_to<std::uint64_t>();
    const auto inner_end = detail::floor_div(scaled_b).convert_to<std::uint64_t>();
    if (inner_end > inner_k0) {
        bracket.inner = madic_union::cells(m, n, inner_k0, inner_end - 1);
    }
    return bracket;
}

[[nodiscard]] inline madic_bracket madic_cover(double a, double b, unsigned n, unsigned m) {
    return madic_cover(rational(a), rational(b), n, m);
}

namespace detail {

inline std::uint64_t parse_unsigned(std::string_view text, std::string_view what) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw input_error("malformed " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

inline rational parse_fraction(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        return rational(parse_unsigned(text, "rational"));
    }
    const auto num = parse_unsigned(text.substr(0, slash), "rational numerator");
    const auto den = parse_unsigned(text.substr(slash + 1), "rational denominator");
    if (den == 0) {
        throw input_error("rational '" + std::string(text) + "' has a zero denominator");
    }
    return rational(num) / rational(den);
}

}  // namespace detail

/// Parses "n:k0..k1" (or "n:k" for a single cell).
[[nodiscard]] inline madic_union parse_cells(std::string_view text, unsigned m) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw input_error("cell range '" + std::string(text) + "' needs the form n:k0..k1");
    }
    const auto level = detail::parse_unsigned(text.substr(0, colon), "cell level");
    const std::string_view range = text.substr(colon + 1);
    const auto dots = range.find("..");
    const auto k0 = detail::parse_unsigned(range.substr(0, dots), "cell index");
    const auto k1 = dots == std::string_view::npos ? k0 : detail::parse_unsigned(range.substr(dots + 2), "cell index");
    try {
        return madic_union::cells(m, static_cast<unsigned>(level), k0, k1);
    } catch (const domain_error &e) {
        throw input_error(e.what());
    }
}

/// Parses "a/b..c/d" into exact endpoints.
[[nodiscard]] inline std::pair<rational, rational> parse_interval(std::string_view text) {
    const auto dots = text.find("..");
    if (dots == std::string_view::npos) {
        throw input_error("interval '" + std::string(text) + "' needs the form a/b..c/d");
    }
    auto a = detail::parse_fraction(text.substr(0, dots));
    auto b = detail::parse_fraction(text.substr(dots + 2));
    if (!(a >= 0 && a < b && b <= 1)) {
        throw input_error("interval '" + std::string(text) + "' must satisfy 0 <= a < b <= 1");
    }
    return {std::move(a), std::move(b)};
}

}  // namespace treeharmonic
