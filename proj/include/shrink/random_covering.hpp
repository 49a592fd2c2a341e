#pragma once

/**
 * @file random_covering.hpp
 * @brief Random arcs on the circle: Monte Carlo coverage and the Shepp criterion
 * sum_n exp(l_1 + ... + l_n) / n^2.
 *
 * "Covered" means the exact union of the half-open arcs has measure 1.
 * Centers are u / 2^64 with u drawn from std::mt19937_64; trial t of a run with
 * master seed s uses the seed splitmix64(s + (t + 1) * 0x9E3779B97F4A7C15).
 */

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "shrink/error.hpp"
#include "shrink/interval_algebra.hpp"
#include "shrink/rational.hpp"
#include "shrink/target_engine.hpp"

namespace shrink {

using HighPrecision = boost::multiprecision::cpp_dec_float_50;
inline constexpr int kSheppPrecisionDigits = 50;

/// Arc lengths l_n, n >= 1.
class LengthFamily {
public:
    enum class Family { c_over_n, log_n_over_n, table };

    /// l_n = min(c / n, 1).
    static LengthFamily c_over_n(Rational c) {
        if (c <= 0) throw Error(ErrorKind::invalid_argument, "length constant must be positive");
        LengthFamily f;
        f.family_ = Family::c_over_n;
        f.c_ = std::move(c);
        return f;
    }
    /// l_n = min(L(n) / n, 1) with the rational log surrogate L.
    static LengthFamily log_n_over_n() {
        LengthFamily f;
        f.family_ = Family::log_n_over_n;
        return f;
    }
    /// Explicit lengths in [0, 1].
    static LengthFamily table(std::vector<Rational> values) {
        if (values.empty()) throw Error(ErrorKind::invalid_argument, "length table is empty");
        for (const auto& v : values)
            if (v < 0 || v > 1) throw Error(ErrorKind::invalid_argument, "table lengths must lie in [0,1]");
        LengthFamily f;
        f.family_ = Family::table;
        f.table_ = std::make_shared<const std::vector<Rational>>(std::move(values));
        return f;
    }

    Family family() const noexcept { return family_; }
    const Rational& c() const noexcept { return c_; }
    const std::vector<Rational>& table_values() const { return *table_; }
    std::uint64_t limit() const { return family_ == Family::table ? table_->size() : 0; }

    Rational at(std::uint64_t n) const {
        if (n < 1) throw Error(ErrorKind::invalid_argument, "lengths are indexed from n = 1");
        Rational v;
        switch (family_) {
        case Family::c_over_n: v = c_ / Rational(Integer(static_cast<unsigned long>(n))); break;
        case Family::log_n_over_n: v = detail::log_surrogate(n) / Rational(Integer(static_cast<unsigned long>(n))); break;
        case Family::table:
            if (n > table_->size())
                throw Error(ErrorKind::horizon, "length table has " + std::to_string(table_->size()) + " entries, index " +
                                                    std::to_string(n) + " requested");
            return (*table_)[n - 1];
        }
        return v > 1 ? Rational(1) : v;
    }

    std::string describe() const {
        switch (family_) {
        case Family::c_over_n: return (c_.den() == 1 ? c_.num().get_str() : "(" + to_string(c_) + ")") + "/n";
        case Family::log_n_over_n: return "log n/n";
        case Family::table: return "table(" + std::to_string(table_->size()) + ")";
        }
        return "?";
    }

private:
    Family family_ = Family::c_over_n;
    Rational c_{1};
    std::shared_ptr<const std::vector<Rational>> table_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
    return splitmix64(master + (trial + 1) * 0x9E3779B97F4A7C15ULL);
}

/// u / 2^64 for the next 64-bit draw.
inline CirclePoint uniform_point(std::mt19937_64& eng) {
    Integer u;
    mpz_set_ui(u.get_mpz_t(), static_cast<unsigned long>(eng()));
    mpq_class q(u);
    mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), 64);
    return CirclePoint(Rational(std::move(q)));
}

/// The union of the first N random arcs (centers uniform, arc n of length l_n).
inline ArcSet random_arc_union(std::uint64_t seed, const LengthFamily& lengths, std::uint64_t horizon) {
    if (horizon < 1) throw Error(ErrorKind::invalid_argument, "sample_cover needs N >= 1");
    if (lengths.limit() != 0 && horizon > lengths.limit())
        throw Error(ErrorKind::horizon, "length table shorter than N");
    std::mt19937_64 eng(seed);
    std::vector<Segment> segs;
    segs.reserve(horizon + 1);
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        CirclePoint c = uniform_point(eng);
        Rational l = lengths.at(n);
        if (l == 1) return ArcSet::full();
        if (l == 0) continue;
        ArcSet a = ArcSet::from_arc(Arc(CirclePoint(c.value() - l / 2), l));
        segs.insert(segs.end(), a.segments().begin(), a.segments().end());
    }
    return normalize_segments(std::move(segs));
}

inline bool sample_cover(std::uint64_t seed, const LengthFamily& lengths, std::uint64_t horizon) {
    return random_arc_union(seed, lengths, horizon).is_full();
}

struct CoverageEstimate {
    std::uint64_t trials = 0;
    std::uint64_t covered = 0;
    Rational estimate;
    double wilson_low = 0;
    double wilson_high = 0;
    std::uint64_t seed = 0;
    bool certain = false;  // outcome forced whatever the centers: interval collapses
};

/// Wilson score interval at 95%.
inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials) {
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double denom = 1 + z * z / n;
    const double centre = (p + z * z / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

inline CoverageEstimate coverage_probability(std::uint64_t seed, const LengthFamily& lengths, std::uint64_t horizon,
                                             std::uint64_t trials) {
    if (trials < 1) throw Error(ErrorKind::invalid_argument, "coverage_probability needs trials >= 1");
    CoverageEstimate est;
    est.trials = trials;
    est.seed = seed;
    // a full-length arc always covers; total length below 1 never does
    Rational total(0);
    bool full_arc = false;
    for (std::uint64_t n = 1; n <= horizon && !full_arc; ++n) {
        Rational l = lengths.at(n);
        full_arc = l == 1;
        total += l;
    }
    for (std::uint64_t t = 0; t < trials; ++t)
        if (sample_cover(trial_seed(seed, t), lengths, horizon)) ++est.covered;
    est.estimate = Rational(Integer(static_cast<unsigned long>(est.covered)), Integer(static_cast<unsigned long>(trials)));
    if (full_arc || total < 1) {
        est.certain = true;
        est.wilson_low = est.wilson_high = est.estimate.to_double();
    } else {
        std::tie(est.wilson_low, est.wilson_high) = wilson_interval(est.covered, trials);
    }
    return est;
}

/// S_n = sum_{k <= n} exp(l_1 + ... + l_k) / k^2 for n = 1..N, in 50-digit decimal arithmetic.
inline std::vector<HighPrecision> shepp_partial_sums(const LengthFamily& lengths, std::uint64_t horizon) {
    if (horizon < 1) throw Error(ErrorKind::invalid_argument, "shepp_partial_sums needs N >= 1");
    if (lengths.limit() != 0 && horizon > lengths.limit())
        throw Error(ErrorKind::horizon, "length table shorter than N");
    std::vector<HighPrecision> out;
    out.reserve(horizon);
    HighPrecision prefix = 0, sum = 0;
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        Rational l = lengths.at(n);
        prefix += HighPrecision(l.num().get_str()) / HighPrecision(l.den().get_str());
        HighPrecision k = static_cast<double>(n);
        sum += boost::multiprecision::exp(prefix) / (k * k);
        out.push_back(sum);
    }
    return out;
}

/// Decimal rendering with `digits` significant digits.
inline std::string to_string(const HighPrecision& v, int digits = 30) { return v.str(digits, std::ios_base::fmtflags{}); }

enum class Classification { diverges, converges, unknown };

inline const char* to_string(Classification c) {
    switch (c) {
    case Classification::diverges: return "diverges";
    case Classification::converges: return "converges";
    case Classification::unknown: return "unknown";
    }
    return "unknown";
}

/// c/n behaves like sum n^(c-2): diverges iff c >= 1. log n/n diverges. Tables are unknown.
inline Classification classify_lengths(const LengthFamily& lengths) {
    switch (lengths.family()) {
    case LengthFamily::Family::c_over_n: return lengths.c() >= 1 ? Classification::diverges : Classification::converges;
    case LengthFamily::Family::log_n_over_n: return Classification::diverges;
    case LengthFamily::Family::table: return Classification::unknown;
    }
    return Classification::unknown;
}

}  // namespace shrink
