#pragma once

// Scalar helpers shared by the double and exact-rational code paths.

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <string>
#include <concepts>
#include <type_traits>

namespace treeharmonic {

using rational = boost::multiprecision::cpp_rational;

template <typename T>
inline constexpr bool is_rational_v = std::is_same_v<T, rational>;

template <typename T>
concept tree_scalar = std::same_as<T, double> || std::same_as<T, rational>;

template <tree_scalar T>
[[nodiscard]] inline double to_double(const T &x) {
    if constexpr (is_rational_v<T>) {
        return x.template convert_to<double>();
    } else {
        return x;
    }
}

/// Exact conversion; every finite double is a dyadic rational.
template <tree_scalar T>
[[nodiscard]] inline T from_double(double x) {
    return T(x);
}

template <tree_scalar T>
[[nodiscard]] inline T abs_value(const T &x) {
    return x < T(0) ? T(-x) : x;
}

/// Integer power by repeated squaring; exact for rationals.
template <tree_scalar T>
[[nodiscard]] inline T ipow(T base, unsigned exponent) {
    T result(1);
    while (exponent != 0) {
        if (exponent & 1U) {
            result *= base;
        }
        exponent >>= 1U;
        if (exponent != 0) {
            base *= base;
        }
    }
    return result;
}

/// Shortest decimal text that round-trips to the same double.
[[nodiscard]] inline std::string format_double(double x) {
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), x);
    return std::string(buffer, ec == std::errc{} ? end : buffer);
}

[[nodiscard]] inline double log_base(double x, double base) {
    return std::log(x) / std::log(base);
}

}  // namespace treeharmonic
