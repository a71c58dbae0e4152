#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "gp/error.hpp"

namespace gp {

template <typename T>
using BinOp = T (*)(T, T);

// (add, multiply, add-identity) algebra substituted for (+,*) in matrix
// multiply. add must be associative and commutative; zero neutral for add.
template <typename T>
struct Semiring {
    const char* name;
    BinOp<T> add;
    BinOp<T> mul;
    T zero;
};

namespace ops {

template <typename T> T add(T a, T b) { return a + b; }
template <typename T> T sub(T a, T b) { return a - b; }
template <typename T> T mul(T a, T b) { return a * b; }
template <typename T> T div(T a, T b) { return a / b; }
template <typename T> T min(T a, T b) { return a < b ? a : b; }
template <typename T> T max(T a, T b) { return a < b ? b : a; }
template <typename T> T logical_or(T a, T b) { return (a != T{} || b != T{}) ? T{1} : T{0}; }
template <typename T> T logical_and(T a, T b) { return (a != T{} && b != T{}) ? T{1} : T{0}; }
template <typename T> T logical_xor(T a, T b) { return ((a != T{}) != (b != T{})) ? T{1} : T{0}; }

template <typename T> constexpr T plus_infinity() { return std::numeric_limits<T>::max(); }
template <> constexpr double plus_infinity<double>() { return std::numeric_limits<double>::infinity(); }
template <typename T> constexpr T minus_infinity() { return std::numeric_limits<T>::lowest(); }
template <> constexpr double minus_infinity<double>() { return -std::numeric_limits<double>::infinity(); }

// Saturating + used as the min-plus multiply so that the +inf sentinel is
// absorbing rather than wrapping.
template <typename T>
T saturating_add(T a, T b) {
    if (a == plus_infinity<T>() || b == plus_infinity<T>()) return plus_infinity<T>();
    return a + b;
}

}  // namespace ops

template <typename T>
Semiring<T> plus_times() {
    return {"plus_times", ops::add<T>, ops::mul<T>, T{}};
}

// Tropical semiring; add-identity is the +inf sentinel (unreachable).
template <typename T>
Semiring<T> min_plus() {
    return {"min_plus", ops::min<T>, ops::saturating_add<T>, ops::plus_infinity<T>()};
}

template <typename T>
Semiring<T> max_plus() {
    return {"max_plus", ops::max<T>, ops::saturating_add<T>, ops::minus_infinity<T>()};
}

// Boolean semiring over the nonzero predicate; results are 0/1.
template <typename T>
Semiring<T> or_and() {
    return {"or_and", ops::logical_or<T>, ops::logical_and<T>, T{}};
}

template <typename T>
Semiring<T> max_min() {
    return {"max_min", ops::max<T>, ops::min<T>, ops::minus_infinity<T>()};
}

template <typename T>
Semiring<T> semiring_by_name(const std::string& name) {
    if (name == "plus_times") return plus_times<T>();
    if (name == "min_plus") return min_plus<T>();
    if (name == "max_plus") return max_plus<T>();
    if (name == "or_and") return or_and<T>();
    if (name == "max_min") return max_min<T>();
    throw ConfigError("unknown semiring '" + name + "'");
}

// Element-wise operator descriptor. div is undefined on explicit stored
// zero divisors; absent coordinates are handled by pattern semantics, not
// by the scalar function.
template <typename T>
struct EwiseOp {
    enum class Kind { add, sub, mul, div, user };
    Kind kind;
    BinOp<T> fn;

    static EwiseOp add_op() { return {Kind::add, ops::add<T>}; }
    static EwiseOp sub_op() { return {Kind::sub, ops::sub<T>}; }
    static EwiseOp mul_op() { return {Kind::mul, ops::mul<T>}; }
    static EwiseOp div_op() { return {Kind::div, ops::div<T>}; }
    static EwiseOp user_op(BinOp<T> fn) { return {Kind::user, fn}; }
};

}  // namespace gp
