#pragma once

/**
 * @file target_engine.hpp
 * @brief Rate schedules, target sequences, hit detection and tail-union quantities.
 *
 * Geometric hits use closed balls: tau^n x hits B_eps(y) iff d(tau^n x, y) <= eps.
 * Tail unions realize each ball as the half-open arc [y - eps, y + eps), which
 * differs from the closed ball by one point.
 */

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "shrink/circle_maps.hpp"
#include "shrink/error.hpp"
#include "shrink/interval_algebra.hpp"
#include "shrink/rational.hpp"

namespace shrink {

// ---------------------------------------------------------------------------
// Rate schedules

namespace detail {

inline constexpr int kLogBits = 40;
inline constexpr int kPowBits = 48;

/// floor(ln(max(n, 3)) * 2^40) / 2^40: a rational stand-in for ln n that is
/// positive and nondecreasing in n.
inline Rational log_surrogate(std::uint64_t n) {
    long double v = std::log(static_cast<long double>(n < 3 ? 3 : n));
    auto scaled = static_cast<long long>(std::floor(std::ldexp(v, kLogBits)));
    return Rational::dyadic(scaled, kLogBits);
}

/// n^-alpha. Exact for integer alpha; otherwise floor(n^-alpha * 2^48) / 2^48.
inline Rational inverse_power(std::uint64_t n, const Rational& alpha) {
    if (alpha.den() == 1 && alpha.num().fits_ulong_p()) {
        Integer p(1);
        Integer base;
        mpz_set_ui(base.get_mpz_t(), static_cast<unsigned long>(n));
        mpz_pow_ui(p.get_mpz_t(), base.get_mpz_t(), alpha.num().get_ui());
        return Rational(Integer(1), p);
    }
    long double v = std::pow(static_cast<long double>(n), -static_cast<long double>(alpha.to_double()));
    auto scaled = static_cast<long long>(std::floor(std::ldexp(v, kPowBits)));
    if (scaled <= 0)
        throw Error(ErrorKind::horizon, "n^-alpha underflows the 2^-48 grid at n = " + std::to_string(n));
    return Rational::dyadic(scaled, kPowBits);
}

}  // namespace detail

/// A positive nonincreasing rate sequence eps_n, n >= 1.
class RateSeq {
public:
    enum class Family { c_over_n, c_over_n_log_n, c_over_n_pow, log_n_over_n, table, dyadic_floor };

    static RateSeq c_over_n(Rational c) { return make(Family::c_over_n, std::move(c)); }
    static RateSeq c_over_n_log_n(Rational c) { return make(Family::c_over_n_log_n, std::move(c)); }
    static RateSeq c_over_n_pow(Rational c, Rational alpha) {
        if (alpha <= 0) throw Error(ErrorKind::invalid_argument, "rate exponent must be positive");
        RateSeq r = make(Family::c_over_n_pow, std::move(c));
        r.alpha_ = std::move(alpha);
        return r;
    }
    static RateSeq log_n_over_n() { return make(Family::log_n_over_n, Rational(1)); }
    static RateSeq table(std::vector<Rational> values) {
        if (values.empty()) throw Error(ErrorKind::invalid_argument, "rate table is empty");
        for (const auto& v : values)
            if (v <= 0) throw Error(ErrorKind::invalid_argument, "rate table entries must be positive");
        RateSeq r = make(Family::table, Rational(1));
        r.table_ = std::make_shared<const std::vector<Rational>>(std::move(values));
        return r;
    }
    /// eps_n replaced by the largest power of two <= eps_n (capped at 1).
    static RateSeq dyadic_floor(RateSeq inner) {
        RateSeq r = make(Family::dyadic_floor, Rational(1));
        r.inner_ = std::make_shared<const RateSeq>(std::move(inner));
        return r;
    }

    Family family() const noexcept { return family_; }
    const Rational& c() const noexcept { return c_; }
    const Rational& alpha() const noexcept { return alpha_; }
    const std::vector<Rational>& table_values() const { return *table_; }
    const RateSeq& inner() const { return *inner_; }

    /// Largest n with a defined value; 0 means unbounded.
    std::uint64_t limit() const {
        if (family_ == Family::table) return table_->size();
        if (family_ == Family::dyadic_floor) return inner_->limit();
        return 0;
    }

    Rational at(std::uint64_t n) const {
        if (n < 1) throw Error(ErrorKind::invalid_argument, "rates are indexed from n = 1");
        switch (family_) {
        case Family::c_over_n: return c_ / Rational(Integer(static_cast<unsigned long>(n)));
        case Family::c_over_n_log_n:
            return c_ / (Rational(Integer(static_cast<unsigned long>(n))) * detail::log_surrogate(n));
        case Family::c_over_n_pow: return c_ * detail::inverse_power(n, alpha_);
        case Family::log_n_over_n: return detail::log_surrogate(n) / Rational(Integer(static_cast<unsigned long>(n)));
        case Family::table:
            if (n > table_->size())
                throw Error(ErrorKind::horizon, "rate table has " + std::to_string(table_->size()) +
                                                    " entries, index " + std::to_string(n) + " requested");
            return (*table_)[n - 1];
        case Family::dyadic_floor: return shrink::dyadic_floor(inner_->at(n));
        }
        return Rational(0);
    }
    Rational operator()(std::uint64_t n) const { return at(n); }

    /// Throws unless eps_1..eps_N are positive and nonincreasing.
    void validate(std::uint64_t horizon) const {
        if (limit() != 0 && horizon > limit())
            throw Error(ErrorKind::horizon, "rates defined only up to n = " + std::to_string(limit()));
        Rational prev;
        for (std::uint64_t n = 1; n <= horizon; ++n) {
            Rational v = at(n);
            if (v <= 0) throw Error(ErrorKind::invalid_argument, "rate eps_" + std::to_string(n) + " is not positive");
            if (n > 1 && v > prev)
                throw Error(ErrorKind::invalid_argument, "rates increase at n = " + std::to_string(n));
            prev = std::move(v);
        }
    }

    /// Symbolic answer to "sum eps_n = infinity"; nullopt for tables.
    std::optional<bool> diverges() const {
        switch (family_) {
        case Family::c_over_n:
        case Family::c_over_n_log_n:
        case Family::log_n_over_n: return true;
        case Family::c_over_n_pow: return alpha_ <= 1;
        case Family::table: return std::nullopt;
        case Family::dyadic_floor: return inner_->diverges();  // floor keeps eps_n/2 < value
        }
        return std::nullopt;
    }

    std::string describe() const {
        auto coef = [this] { return c_.den() == 1 ? c_.num().get_str() : "(" + to_string(c_) + ")"; };
        switch (family_) {
        case Family::c_over_n: return coef() + "/n";
        case Family::c_over_n_log_n: return coef() + "/(n log n)";
        case Family::c_over_n_pow: return coef() + "/n^" + (alpha_.den() == 1 ? alpha_.num().get_str() : "(" + to_string(alpha_) + ")");
        case Family::log_n_over_n: return "log n/n";
        case Family::table: return "table(" + std::to_string(table_->size()) + ")";
        case Family::dyadic_floor: return "dyadic_floor(" + inner_->describe() + ")";
        }
        return "?";
    }

private:
    static RateSeq make(Family f, Rational c) {
        if (c <= 0) throw Error(ErrorKind::invalid_argument, "rate constant must be positive");
        RateSeq r;
        r.family_ = f;
        r.c_ = std::move(c);
        return r;
    }

    Family family_ = Family::c_over_n;
    Rational c_{1};
    Rational alpha_{1};
    std::shared_ptr<const std::vector<Rational>> table_;
    std::shared_ptr<const RateSeq> inner_;
};

/// Partial sum eps_1 + ... + eps_N.
inline Rational expected_hits(const RateSeq& rates, std::uint64_t horizon) {
    if (horizon < 1) throw Error(ErrorKind::invalid_argument, "expected_hits needs N >= 1");
    Rational s(0);
    for (std::uint64_t n = 1; n <= horizon; ++n) s += rates.at(n);
    return s;
}

// ---------------------------------------------------------------------------
// Targets

struct GeometricBalls {
    CirclePoint center;
    RateSeq radii;
};
/// Balls centred at the orbit's own starting point.
struct SelfBalls {
    RateSeq radii;
};
/// Explicit table, sets[n-1] = B_n.
struct AbstractSets {
    std::vector<ArcSet> sets;
    bool shrinking = false;
};
struct FixedSet {
    ArcSet set;
};

class TargetSeq {
public:
    using Variant = std::variant<GeometricBalls, SelfBalls, AbstractSets, FixedSet>;

    static TargetSeq balls(CirclePoint center, RateSeq radii) { return TargetSeq(GeometricBalls{std::move(center), std::move(radii)}); }
    static TargetSeq self_balls(RateSeq radii) { return TargetSeq(SelfBalls{std::move(radii)}); }
    static TargetSeq sets(std::vector<ArcSet> table, bool shrinking = false) {
        if (shrinking)
            for (std::size_t i = 1; i < table.size(); ++i)
                if (!subset(table[i], table[i - 1]))
                    throw Error(ErrorKind::invalid_argument, "target flagged shrinking but B_" + std::to_string(i + 1) +
                                                                 " is not inside B_" + std::to_string(i));
        return TargetSeq(AbstractSets{std::move(table), shrinking});
    }
    static TargetSeq fixed(ArcSet s) { return TargetSeq(FixedSet{std::move(s)}); }

    const Variant& variant() const noexcept { return v_; }

    /// Largest defined n; 0 means unbounded.
    std::uint64_t limit() const {
        return std::visit(
            [](const auto& t) -> std::uint64_t {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, AbstractSets>) return t.sets.size();
                else if constexpr (std::is_same_v<T, FixedSet>) return 0;
                else return t.radii.limit();
            },
            v_);
    }

    void require(std::uint64_t horizon) const {
        std::uint64_t l = limit();
        if (l != 0 && horizon > l)
            throw Error(ErrorKind::horizon, "targets defined only up to n = " + std::to_string(l) +
                                                ", horizon " + std::to_string(horizon) + " requested");
    }

    /// Does the point p = tau^n x (orbit started at x) lie in B_n?
    bool hit(std::uint64_t n, const CirclePoint& p, const CirclePoint& x) const {
        return std::visit(
            [&](const auto& t) -> bool {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, GeometricBalls>) return circle_distance(p, t.center) <= t.radii.at(n);
                else if constexpr (std::is_same_v<T, SelfBalls>) return circle_distance(p, x) <= t.radii.at(n);
                else if constexpr (std::is_same_v<T, AbstractSets>) return t.sets.at(n - 1).contains(p);
                else return t.set.contains(p);
            },
            v_);
    }

    /// B_n as an arc set (half-open realization for balls; needs a centre for SelfBalls).
    ArcSet set_at(std::uint64_t n, const CirclePoint& x = CirclePoint()) const {
        return std::visit(
            [&](const auto& t) -> ArcSet {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, GeometricBalls>) return ball(t.center, t.radii.at(n));
                else if constexpr (std::is_same_v<T, SelfBalls>) return ball(x, t.radii.at(n));
                else if constexpr (std::is_same_v<T, AbstractSets>) return t.sets.at(n - 1);
                else return t.set;
            },
            v_);
    }

private:
    explicit TargetSeq(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

// ---------------------------------------------------------------------------
// Hits

struct HitRecord {
    std::vector<std::uint64_t> times;
    std::uint64_t horizon = 0;

    std::optional<std::uint64_t> first_hit() const {
        if (times.empty()) return std::nullopt;
        return times.front();
    }
    std::size_t count() const noexcept { return times.size(); }

    friend bool operator==(const HitRecord&, const HitRecord&) = default;
};

/// Times n in 1..N with tau^n x in B_n.
inline HitRecord hits(const MapSpec& map, const CirclePoint& x, const TargetSeq& targets, std::uint64_t horizon) {
    if (horizon < 1) throw Error(ErrorKind::invalid_argument, "hits needs N >= 1");
    targets.require(horizon);
    HitRecord rec;
    rec.horizon = horizon;
    OrbitStepper step(map, x);
    for (std::uint64_t n = 1; n <= horizon; ++n)
        if (targets.hit(n, step.next(), x)) rec.times.push_back(n);
    return rec;
}

/// Hits along a subsequence: index n counts when tau^{m_n} x lies in B_n.
/// `times` must be strictly increasing and positive.
inline HitRecord hits_along(const MapSpec& map, const CirclePoint& x, const TargetSeq& targets,
                            std::span<const std::uint64_t> times) {
    targets.require(times.size());
    HitRecord rec;
    rec.horizon = times.size();
    OrbitStepper step(map, x);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] <= prev) throw Error(ErrorKind::invalid_argument, "subsequence times must be strictly increasing and positive");
        while (step.time() < times[i]) step.next();
        prev = times[i];
        if (targets.hit(i + 1, step.current(), x)) rec.times.push_back(i + 1);
    }
    return rec;
}

/// m_n = n^p for n = 1..count.
inline std::vector<std::uint64_t> power_subsequence(unsigned p, std::uint64_t count) {
    if (p < 1) throw Error(ErrorKind::invalid_argument, "subsequence power must be >= 1");
    std::vector<std::uint64_t> out;
    out.reserve(count);
    for (std::uint64_t n = 1; n <= count; ++n) {
        std::uint64_t v = 1;
        for (unsigned i = 0; i < p; ++i) {
            if (v > UINT64_MAX / n) throw Error(ErrorKind::horizon, "power subsequence overflows 64 bits");
            v *= n;
        }
        out.push_back(v);
    }
    return out;
}

struct ScaledDistance {
    Rational value;
    std::uint64_t argmin = 0;
};

/// min over n <= N of n * d(tau^n x, y); the first minimizing n is reported.
inline ScaledDistance scaled_distance_min(const MapSpec& map, const CirclePoint& x, const CirclePoint& y,
                                          std::uint64_t horizon) {
    if (horizon < 1) throw Error(ErrorKind::invalid_argument, "scaled_distance_min needs N >= 1");
    ScaledDistance best;
    OrbitStepper step(map, x);
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        Rational v = Rational(Integer(static_cast<unsigned long>(n))) * circle_distance(step.next(), y);
        if (n == 1 || v < best.value) best = {std::move(v), n};
    }
    return best;
}

/// Per-step values n * d(tau^n x, y), n = 1..N.
inline std::vector<Rational> scaled_distance_series(const MapSpec& map, const CirclePoint& x, const CirclePoint& y,
                                                    std::uint64_t horizon) {
    std::vector<Rational> out;
    out.reserve(horizon);
    OrbitStepper step(map, x);
    for (std::uint64_t n = 1; n <= horizon; ++n)
        out.push_back(Rational(Integer(static_cast<unsigned long>(n))) * circle_distance(step.next(), y));
    return out;
}

// ---------------------------------------------------------------------------
// Tail unions

struct TailUnion {
    ArcSet set;
    Rational measure;
};

/// Union of B_{eps_n}(tau^n x) for N <= n <= M.
inline TailUnion tail_ball_union(const MapSpec& map, const CirclePoint& x, const RateSeq& radii, std::uint64_t first,
                                 std::uint64_t last) {
    if (first < 1 || first > last) throw Error(ErrorKind::invalid_argument, "tail_ball_union needs 1 <= N <= M");
    if (radii.limit() != 0 && last > radii.limit())
        throw Error(ErrorKind::horizon, "radii defined only up to n = " + std::to_string(radii.limit()));
    OrbitStepper step(map, x);
    std::vector<Segment> segs;
    for (std::uint64_t n = 1; n <= last; ++n) {
        const CirclePoint& p = step.next();
        if (n < first) continue;
        ArcSet b = ball(p, radii.at(n));
        if (b.is_full()) return {std::move(b), Rational(1)};
        segs.insert(segs.end(), b.segments().begin(), b.segments().end());
    }
    ArcSet u = normalize_segments(std::move(segs));
    Rational m = u.measure();
    return {std::move(u), std::move(m)};
}

/// Union of tau^-n(B_n) over the listed (n, B_n), evaluated in Horner form
/// tau^-n1(B_n1 u tau^-(n2-n1)(B_n2 u ...)). Indices must increase strictly.
inline TailUnion preimage_union(const MapSpec& map, std::span<const std::pair<std::uint64_t, ArcSet>> indexed) {
    if (indexed.empty()) return {ArcSet(), Rational(0)};
    for (std::size_t i = 1; i < indexed.size(); ++i)
        if (indexed[i].first <= indexed[i - 1].first)
            throw Error(ErrorKind::invalid_argument, "preimage_union indices must increase");
    ArcSet acc = indexed.back().second;
    for (std::size_t i = indexed.size() - 1; i-- > 0;) {
        acc = preimage_power(map, std::move(acc), indexed[i + 1].first - indexed[i].first);
        acc = unite(indexed[i].second, acc);
    }
    acc = preimage_power(map, std::move(acc), indexed.front().first);
    Rational m = acc.measure();
    return {std::move(acc), std::move(m)};
}

/// Union of tau^-n(B_n) for N <= n <= M with table[n-1] = B_n.
inline TailUnion tail_preimage_union(const MapSpec& map, std::span<const ArcSet> table, std::uint64_t first,
                                     std::uint64_t last) {
    if (first < 1 || first > last) throw Error(ErrorKind::invalid_argument, "tail_preimage_union needs 1 <= N <= M");
    if (last > table.size())
        throw Error(ErrorKind::horizon, "target table has " + std::to_string(table.size()) + " entries, M = " +
                                            std::to_string(last) + " requested");
    std::vector<std::pair<std::uint64_t, ArcSet>> indexed;
    indexed.reserve(last - first + 1);
    for (std::uint64_t n = first; n <= last; ++n) indexed.emplace_back(n, table[n - 1]);
    return preimage_union(map, indexed);
}

/// Fraction of sample points with at least one hit time in [N0, N].
inline Rational visibility_fraction(const MapSpec& map, std::span<const CirclePoint> sample, const TargetSeq& targets,
                                    std::uint64_t first, std::uint64_t last) {
    if (sample.empty()) throw Error(ErrorKind::empty_input, "visibility_fraction needs a nonempty sample");
    if (first < 1 || first > last) throw Error(ErrorKind::invalid_argument, "visibility_fraction needs 1 <= N0 <= N");
    targets.require(last);
    long visible = 0;
    for (const auto& x : sample) {
        OrbitStepper step(map, x);
        for (std::uint64_t n = 1; n <= last; ++n) {
            const CirclePoint& p = step.next();
            if (n >= first && targets.hit(n, p, x)) {
                ++visible;
                break;
            }
        }
    }
    return Rational(visible, static_cast<long>(sample.size()));
}

}  // namespace shrink
