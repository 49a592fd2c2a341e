#pragma once

/**
 * @file rational.hpp
 * @brief Exact rational scalar used everywhere in the library.
 *
 * Values of the form n / 2^e with |n| < 2^62 and 0 <= e <= 62 are stored
 * inline; every other rational is held as a GMP mpq. The odometer and
 * doubling constructions live almost entirely in the inline range, which
 * keeps set algebra on tens of thousands of arcs fast without giving up
 * exactness. Results are demoted back to the inline form whenever they fit,
 * so each value has exactly one representation.
 */

#include <gmpxx.h>

#include <bit>
#include <cmath>
#include <compare>
#include <concepts>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>

#include "shrink/error.hpp"

namespace shrink {

using Integer = mpz_class;

class Rational {
public:
    Rational() = default;
    Rational(int v) : Rational(static_cast<long long>(v)) {}
    Rational(long v) : Rational(static_cast<long long>(v)) {}
    Rational(long long v) {
        if (fits_small(v)) {
            rep_ = Small{v, 0};
            normalize_small();
        } else {
            rep_ = mpq_class(Integer(static_cast<long>(v)));
        }
    }
    Rational(unsigned v) : Rational(static_cast<long long>(v)) {}
    Rational(unsigned long v) : Rational(Integer(v)) {}
    explicit Rational(const Integer& v) : Rational(mpq_class(v)) {}
    Rational(const Integer& num, const Integer& den) {
        if (den == 0) throw Error(ErrorKind::invalid_argument, "zero denominator");
        mpq_class q(num, den);
        q.canonicalize();
        assign(std::move(q));
    }
    template <std::integral A, std::integral B>
    Rational(A num, B den) : Rational(to_integer(num), to_integer(den)) {}
    explicit Rational(mpq_class q) { assign(std::move(q)); }

    /// Exact n * 2^-e.
    static Rational dyadic(long long n, int e) {
        if (e >= 0 && e <= kMaxExp && fits_small(n)) {
            Rational r;
            r.rep_ = Small{n, e};
            r.normalize_small();
            return r;
        }
        mpq_class q{Integer(static_cast<long>(n))};
        if (e >= 0) mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
        else mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
        return Rational(std::move(q));
    }

    mpq_class to_mpq() const {
        if (const Small* s = small()) {
            mpq_class q{Integer(static_cast<long>(s->num))};
            if (s->exp) mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(s->exp));
            return q;
        }
        return std::get<mpq_class>(rep_);
    }

    Integer num() const {
        if (const Small* s = small()) return Integer(static_cast<long>(s->num));
        return std::get<mpq_class>(rep_).get_num();
    }
    Integer den() const {
        if (const Small* s = small()) {
            Integer d(1);
            mpz_mul_2exp(d.get_mpz_t(), d.get_mpz_t(), static_cast<mp_bitcnt_t>(s->exp));
            return d;
        }
        return std::get<mpq_class>(rep_).get_den();
    }

    int sign() const {
        if (const Small* s = small()) return (s->num > 0) - (s->num < 0);
        return sgn(std::get<mpq_class>(rep_));
    }

    bool is_inline() const noexcept { return small() != nullptr; }
    /// (n, e) with value n * 2^-e and n odd or e == 0, when stored inline.
    std::optional<std::pair<long long, int>> dyadic_parts() const noexcept {
        if (const Small* s = small()) return std::pair<long long, int>{s->num, s->exp};
        return std::nullopt;
    }
    double to_double() const {
        if (const Small* s = small()) return std::ldexp(static_cast<double>(s->num), -s->exp);
        return std::get<mpq_class>(rep_).get_d();
    }

    Rational operator-() const {
        if (const Small* s = small()) {
            Rational r;
            r.rep_ = Small{-s->num, s->exp};
            return r;
        }
        return Rational(mpq_class(-std::get<mpq_class>(rep_)));
    }

    friend Rational operator+(const Rational& a, const Rational& b) { return add(a, b, false); }
    friend Rational operator-(const Rational& a, const Rational& b) { return add(a, b, true); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        const Small* x = a.small();
        const Small* y = b.small();
        if (x && y && x->exp + y->exp <= kMaxExp) {
            __int128 p = static_cast<__int128>(x->num) * y->num;
            if (p > -kLimit && p < kLimit) return dyadic(static_cast<long long>(p), x->exp + y->exp);
        }
        return Rational(mpq_class(a.to_mpq() * b.to_mpq()));
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.sign() == 0) throw Error(ErrorKind::invalid_argument, "division by zero");
        const Small* y = b.small();
        if (y && a.small() && y->num > 0 && std::has_single_bit(static_cast<unsigned long long>(y->num))) {
            const Small* x = a.small();
            int e = x->exp - y->exp + std::countr_zero(static_cast<unsigned long long>(y->num));
            if (e >= 0 && e <= kMaxExp) return dyadic(x->num, e);
        }
        return Rational(mpq_class(a.to_mpq() / b.to_mpq()));
    }

    Rational& operator+=(const Rational& b) { return *this = *this + b; }
    Rational& operator-=(const Rational& b) { return *this = *this - b; }
    Rational& operator*=(const Rational& b) { return *this = *this * b; }
    Rational& operator/=(const Rational& b) { return *this = *this / b; }

    friend int compare(const Rational& a, const Rational& b) {
        const Small* x = a.small();
        const Small* y = b.small();
        if (x && y) {
            __int128 l = static_cast<__int128>(x->num) << (y->exp > x->exp ? y->exp - x->exp : 0);
            __int128 r = static_cast<__int128>(y->num) << (x->exp > y->exp ? x->exp - y->exp : 0);
            return (l > r) - (l < r);
        }
        int c = cmp(a.to_mpq(), b.to_mpq());
        return (c > 0) - (c < 0);
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        const Small* x = a.small();
        const Small* y = b.small();
        if (x && y) return x->num == y->num && x->exp == y->exp;
        if (x || y) return false;  // canonical: inline whenever representable
        return std::get<mpq_class>(a.rep_) == std::get<mpq_class>(b.rep_);
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        int c = compare(a, b);
        return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
    }

    friend Rational abs(const Rational& a) { return a.sign() < 0 ? -a : a; }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
        return os << r.num().get_str() << "/" << r.den().get_str();
    }

private:
    template <std::integral T>
    static Integer to_integer(T v) {
        if constexpr (std::is_signed_v<T>) return Integer(static_cast<long>(v));
        else return Integer(static_cast<unsigned long>(v));
    }

    struct Small {
        long long num;
        int exp;
    };

    static constexpr int kMaxExp = 62;
    static constexpr long long kLimit = 1LL << 62;

    static bool fits_small(long long v) { return v > -kLimit && v < kLimit; }

    const Small* small() const noexcept { return std::get_if<Small>(&rep_); }

    void normalize_small() {
        Small& s = std::get<Small>(rep_);
        if (s.num == 0) {
            s.exp = 0;
            return;
        }
        int tz = std::countr_zero(static_cast<unsigned long long>(s.num < 0 ? -s.num : s.num));
        if (tz > s.exp) tz = s.exp;
        s.num >>= tz;
        s.exp -= tz;
    }

    void assign(mpq_class q) {
        const mpz_class& d = q.get_den();
        const mpz_class& n = q.get_num();
        if (mpz_popcount(d.get_mpz_t()) == 1) {
            std::size_t e = mpz_sizeinbase(d.get_mpz_t(), 2) - 1;
            if (e <= static_cast<std::size_t>(kMaxExp) && n.fits_slong_p()) {
                long v = n.get_si();
                if (fits_small(v)) {
                    rep_ = Small{v, static_cast<int>(e)};
                    return;
                }
            }
        }
        rep_ = std::move(q);
    }

    static Rational add(const Rational& a, const Rational& b, bool subtract) {
        const Small* x = a.small();
        const Small* y = b.small();
        if (x && y) {
            int e = x->exp > y->exp ? x->exp : y->exp;
            __int128 l = static_cast<__int128>(x->num) << (e - x->exp);
            __int128 r = static_cast<__int128>(y->num) << (e - y->exp);
            __int128 s = subtract ? l - r : l + r;
            if (s > -kLimit && s < kLimit) return dyadic(static_cast<long long>(s), e);
        }
        mpq_class r = a.to_mpq();
        if (subtract) r -= b.to_mpq();
        else r += b.to_mpq();
        return Rational(r);
    }

    std::variant<Small, mpq_class> rep_{Small{0, 0}};
};

inline Rational make_rational(long num, long den = 1) { return Rational(num, den); }
inline Rational make_rational(const Integer& num, const Integer& den) { return Rational(num, den); }

/// Parses "p/q", "p" or a plain decimal such as "0.125" (read exactly).
inline Rational parse_rational(std::string_view text) {
    std::string s(text);
    auto bad = [&] { return Error(ErrorKind::invalid_argument, "malformed rational '" + s + "'"); };
    if (s.empty()) throw bad();
    if (auto dot = s.find('.'); dot != std::string::npos) {
        if (s.find('/') != std::string::npos) throw bad();
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        std::size_t places = s.size() - dot - 1;
        Integer num;
        if (digits.empty() || digits == "-" || num.set_str(digits, 10) != 0) throw bad();
        Integer den;
        mpz_ui_pow_ui(den.get_mpz_t(), 10, places);
        return Rational(num, den);
    }
    mpq_class q;
    if (q.set_str(s, 10) != 0 || q.get_den() == 0) throw bad();
    q.canonicalize();
    return Rational(std::move(q));
}

/// Always "p/q", including "0/1" and "3/1".
inline std::string to_string(const Rational& r) { return r.num().get_str() + "/" + r.den().get_str(); }

/// Decimal rendering rounded half-up to `places` digits after the point.
inline std::string to_decimal(const Rational& r, int places = 12) {
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(places));
    const bool negative = r.sign() < 0;
    Rational a = abs(r);
    Integer n = a.num(), d = a.den();
    Integer scaled = n * scale * 2 + d;
    Integer den2 = d * 2;
    Integer q;
    mpz_fdiv_q(q.get_mpz_t(), scaled.get_mpz_t(), den2.get_mpz_t());
    std::string digits = q.get_str();
    if (static_cast<int>(digits.size()) <= places) digits.insert(0, places + 1 - digits.size(), '0');
    std::string out = digits.substr(0, digits.size() - places);
    if (places > 0) out += "." + digits.substr(digits.size() - places);
    if (negative && q != 0) out.insert(0, "-");
    return out;
}

/// 2^k as an exact rational; k may be negative.
inline Rational pow2(long k) {
    if (k <= 0 && k >= -62) return Rational::dyadic(1, static_cast<int>(-k));
    if (k > 0 && k < 62) return Rational::dyadic(1LL << k, 0);
    Integer p;
    mpz_ui_pow_ui(p.get_mpz_t(), 2, static_cast<unsigned long>(k < 0 ? -k : k));
    return k < 0 ? Rational(Integer(1), p) : Rational(p);
}

inline Integer floor(const Rational& r) {
    Integer q, n = r.num(), d = r.den();
    mpz_fdiv_q(q.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    return q;
}

inline Integer ceil(const Rational& r) {
    Integer q, n = r.num(), d = r.den();
    mpz_cdiv_q(q.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    return q;
}

/// Fractional part, x - floor(x), in [0, 1).
inline Rational frac(const Rational& r) {
    if (r.sign() >= 0 && r < Rational(1)) return r;
    if (r.sign() < 0 && r >= Rational(-1)) return r + Rational(1);
    return r - Rational(floor(r));
}

inline bool is_power_of_two(const Integer& z) { return z > 0 && mpz_popcount(z.get_mpz_t()) == 1; }

/// True iff the reduced denominator is a power of two.
inline bool is_dyadic(const Rational& r) { return r.is_inline() || is_power_of_two(r.den()); }

/// Smallest t >= 0 with 2^-t <= x, for x > 0.
inline long dyadic_depth_below(const Rational& x) {
    if (x.sign() <= 0) throw Error(ErrorKind::invalid_argument, "dyadic_depth_below needs x > 0");
    if (x >= Rational(1)) return 0;
    const Integer a = x.num();
    const Integer b = x.den();
    // 2^-t <= a/b  <=>  b <= a * 2^t
    long t = static_cast<long>(mpz_sizeinbase(b.get_mpz_t(), 2)) -
             static_cast<long>(mpz_sizeinbase(a.get_mpz_t(), 2)) - 1;
    if (t < 0) t = 0;
    Integer lhs;
    while (true) {
        mpz_mul_2exp(lhs.get_mpz_t(), a.get_mpz_t(), static_cast<mp_bitcnt_t>(t));
        if (b <= lhs) return t;
        ++t;
    }
}

/// Largest power of two <= x, for x > 0.
inline Rational dyadic_floor(const Rational& x) {
    if (x.sign() <= 0) throw Error(ErrorKind::invalid_argument, "dyadic_floor needs x > 0");
    if (x >= Rational(1)) {
        Integer f = floor(x);
        return pow2(static_cast<long>(mpz_sizeinbase(f.get_mpz_t(), 2)) - 1);
    }
    return pow2(-dyadic_depth_below(x));
}

inline double to_double(const Rational& r) { return r.to_double(); }

}  // namespace shrink
