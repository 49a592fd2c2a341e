#pragma once

// Seeded generators and small oracles shared by the unit tests.

#include <cstdint>
#include <random>
#include <vector>

#include "shrink/shrink.hpp"

namespace testing_support {

using namespace shrink;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_); }
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
    bool coin() { return below(2) == 1; }
    std::uint64_t bits() { return eng_(); }

    /// k / den with k uniform in [0, den).
    Rational on_grid(std::uint64_t den) { return Rational(static_cast<long long>(below(den)), static_cast<long long>(den)); }

    /// Rational in [0,1) with a random denominator up to max_den.
    Rational unit(std::uint64_t max_den = 1000) {
        std::uint64_t q = range(1, max_den);
        return Rational(static_cast<long long>(below(q)), static_cast<long long>(q));
    }

    /// Random point with a large odd denominator (aperiodic-looking orbits).
    CirclePoint wide_point() {
        Integer q, p;
        mpz_set_ui(q.get_mpz_t(), static_cast<unsigned long>((bits() >> 2) | (1ULL << 61) | 1ULL));
        mpz_set_ui(p.get_mpz_t(), static_cast<unsigned long>(bits() >> 2));
        p %= q;
        return CirclePoint(Rational(p, q));
    }

    /// Up to `count` random arcs with endpoints on the grid 1/den (may wrap).
    ArcSet grid_set(std::uint64_t den, std::size_t count) {
        std::vector<Arc> arcs;
        std::size_t n = below(count + 1);
        for (std::size_t i = 0; i < n; ++i) {
            Rational start = on_grid(den);
            Rational len(static_cast<long long>(range(1, den)), static_cast<long long>(den));
            arcs.emplace_back(start, len);
        }
        return normalize(arcs);
    }

    /// Random arcs with arbitrary rational endpoints.
    ArcSet general_set(std::size_t count, std::uint64_t max_den = 97) {
        std::vector<Arc> arcs;
        std::size_t n = below(count + 1);
        for (std::size_t i = 0; i < n; ++i) {
            Rational len = unit(max_den);
            if (len == 0) len = Rational(1, static_cast<long long>(max_den));
            arcs.emplace_back(unit(max_den), len);
        }
        return normalize(arcs);
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

/// Cell membership of a set whose endpoints lie on the grid 1/den: cell i is
/// [i/den, (i+1)/den), sampled at its midpoint.
inline std::vector<bool> cells(const ArcSet& s, std::uint64_t den) {
    std::vector<bool> out(den);
    for (std::uint64_t i = 0; i < den; ++i)
        out[i] = s.contains(CirclePoint(Rational(static_cast<long long>(2 * i + 1), static_cast<long long>(2 * den))));
    return out;
}

inline Rational cell_measure(const std::vector<bool>& c) {
    long long k = 0;
    for (bool b : c) k += b;
    return Rational(k, static_cast<long long>(c.size()));
}

inline std::vector<MapSpec> sample_maps() {
    return {MapSpec::rotation(RotationAngle({2, 3, 1, 4})), MapSpec::doubling(), MapSpec::odometer(),
            MapSpec::iet({Rational(1, 5), Rational(1, 3), Rational(7, 15)}, {3, 1, 2})};
}

}  // namespace testing_support
