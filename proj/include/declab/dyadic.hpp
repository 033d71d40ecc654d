#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

#include "declab/errors.hpp"

namespace declab {

/// Exact dyadic rational num / 2^exp2, kept normalized (num odd or exp2 == 0).
///
/// All frequency-side geometry works in this representation so that dyadic
/// partitions, corner arithmetic and the rescaling maps are exact.
struct Dyadic {
    std::int64_t num = 0;
    int exp2 = 0; // denominator exponent, >= 0

    constexpr Dyadic() = default;
    constexpr Dyadic(std::int64_t n, int e) : num(n), exp2(e) { normalize(); }

    static constexpr Dyadic from_int(std::int64_t n) { return Dyadic(n, 0); }

    /// 2^e for any integer e (negative e gives a fraction).
    static constexpr Dyadic pow2(int e) {
        return e >= 0 ? Dyadic(std::int64_t(1) << e, 0) : Dyadic(1, -e);
    }

    constexpr void normalize() {
        if (num == 0) {
            exp2 = 0;
            return;
        }
        while (exp2 > 0 && (num & 1) == 0) {
            num >>= 1;
            --exp2;
        }
    }

    double to_double() const { return std::ldexp(double(num), -exp2); }

    constexpr bool is_zero() const { return num == 0; }

    /// True when the value is an exact power of two (2^j, j in Z).
    constexpr bool is_pow2() const {
        if (num <= 0) return false;
        return (num & (num - 1)) == 0;
    }

    /// For power-of-two values, the exponent j with value == 2^j.
    constexpr int log2() const {
        int j = -exp2;
        std::int64_t n = num;
        while (n > 1) {
            n >>= 1;
            ++j;
        }
        return j;
    }

    friend constexpr Dyadic operator+(Dyadic a, Dyadic b) {
        const int e = a.exp2 > b.exp2 ? a.exp2 : b.exp2;
        return Dyadic((a.num << (e - a.exp2)) + (b.num << (e - b.exp2)), e);
    }
    friend constexpr Dyadic operator-(Dyadic a, Dyadic b) {
        const int e = a.exp2 > b.exp2 ? a.exp2 : b.exp2;
        return Dyadic((a.num << (e - a.exp2)) - (b.num << (e - b.exp2)), e);
    }
    friend constexpr Dyadic operator*(Dyadic a, Dyadic b) {
        return Dyadic(a.num * b.num, a.exp2 + b.exp2);
    }
    friend constexpr Dyadic operator*(std::int64_t k, Dyadic a) {
        return Dyadic(k * a.num, a.exp2);
    }
    constexpr Dyadic operator-() const { return Dyadic(-num, exp2); }

    /// Exact division by a power-of-two dyadic.
    friend constexpr Dyadic div_pow2(Dyadic a, Dyadic b) {
        return a * Dyadic::pow2(-b.log2());
    }

    friend constexpr bool operator==(Dyadic a, Dyadic b) {
        return a.num == b.num && a.exp2 == b.exp2;
    }
    friend constexpr std::strong_ordering operator<=>(Dyadic a, Dyadic b) {
        const int e = a.exp2 > b.exp2 ? a.exp2 : b.exp2;
        return (a.num << (e - a.exp2)) <=> (b.num << (e - b.exp2));
    }

    /// Exact integer quotient a / b; throws when b does not divide a.
    friend std::int64_t exact_ratio(Dyadic a, Dyadic b) {
        if (b.is_zero()) throw InvalidScaleError("division by zero scale");
        const int e = a.exp2 > b.exp2 ? a.exp2 : b.exp2;
        const std::int64_t an = a.num << (e - a.exp2);
        const std::int64_t bn = b.num << (e - b.exp2);
        if (bn == 0 || an % bn != 0)
            throw InvalidScaleError("scale " + b.str() + " does not divide " + a.str());
        return an / bn;
    }

    /// Integer power with non-negative exponent.
    friend Dyadic dyadic_pow(Dyadic a, int k) {
        Dyadic r = Dyadic::from_int(1);
        for (int i = 0; i < k; ++i) r = r * a;
        return r;
    }

    std::string str() const {
        if (exp2 == 0) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(std::int64_t(1) << exp2);
    }
};

/// Parses "k", "a/b" with b a power of two, or a short decimal like "0.25".
Dyadic parse_dyadic(const std::string& text);

} // namespace declab
