#pragma once

/**
 * @file covering_radius.hpp
 * @brief Geometric distortion error r_n(x): the least r such that closed balls
 * of radius r at tau^1 x, ..., tau^n x cover the circle. It equals half the
 * largest circular gap between the distinct points.
 */

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "shrink/circle_maps.hpp"
#include "shrink/error.hpp"
#include "shrink/interval_algebra.hpp"
#include "shrink/rational.hpp"

namespace shrink {

inline Rational covering_radius(std::span<const CirclePoint> points) {
    if (points.empty()) throw Error(ErrorKind::empty_input, "covering_radius needs at least one point (no orbit data)");
    std::vector<Rational> gaps = circular_gaps(points);
    return gaps.back() / 2;
}

/// Sorted point set with a multiset of circular gaps; each insertion splits one gap.
class GapTracker {
public:
    /// Returns false when the point was already present.
    bool insert(const Rational& p) {
        if (points_.empty()) {
            points_.insert(p);
            add_gap(Rational(1));
            return true;
        }
        auto [it, fresh] = points_.insert(p);
        if (!fresh) return false;
        auto next = std::next(it);
        const Rational& succ = next == points_.end() ? *points_.begin() : *next;
        const Rational& pred = it == points_.begin() ? *points_.rbegin() : *std::prev(it);
        remove_gap(forward_gap(pred, succ));
        add_gap(forward_gap(pred, p));
        add_gap(forward_gap(p, succ));
        return true;
    }

    const Rational& max_gap() const { return gaps_.rbegin()->first; }
    std::size_t distinct_gap_lengths() const noexcept { return gaps_.size(); }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

private:
    // Length of the arc from a forward to b (1 when a == b).
    static Rational forward_gap(const Rational& a, const Rational& b) {
        Rational d = b - a;
        if (d <= 0) d += 1;
        return d;
    }
    void add_gap(const Rational& g) { ++gaps_[g]; }
    void remove_gap(const Rational& g) {
        auto it = gaps_.find(g);
        if (--it->second == 0) gaps_.erase(it);
    }

    std::set<Rational> points_;
    std::map<Rational, std::size_t> gaps_;
};

struct CoverProfile {
    std::vector<Rational> values;  // values[n-1] = r_n
    std::vector<Rational> scaled;  // n * r_n
    Rational sup_scaled;
    std::uint64_t argmax = 0;
    std::vector<std::uint32_t> distinct_gaps;  // distinct gap lengths after n points
    bool periodic = false;                     // a repeated orbit point was seen
    std::uint64_t first_repeat = 0;            // time of the first repeat, 0 if none

    std::uint64_t horizon() const noexcept { return values.size(); }
};

/// r_1, ..., r_N along the orbit of x, computed incrementally.
inline CoverProfile covering_profile(const MapSpec& map, const CirclePoint& x, std::uint64_t horizon) {
    if (horizon < 1) throw Error(ErrorKind::invalid_argument, "covering_profile needs N >= 1");
    CoverProfile prof;
    prof.values.reserve(horizon);
    prof.scaled.reserve(horizon);
    prof.distinct_gaps.reserve(horizon);
    GapTracker tracker;
    OrbitStepper step(map, x);
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        if (!tracker.insert(step.next().value()) && !prof.periodic) {
            prof.periodic = true;
            prof.first_repeat = n;
        }
        Rational r = tracker.max_gap() / 2;
        Rational s = Rational(Integer(static_cast<unsigned long>(n))) * r;
        if (n == 1 || s > prof.sup_scaled) {
            prof.sup_scaled = s;
            prof.argmax = n;
        }
        prof.values.push_back(std::move(r));
        prof.scaled.push_back(std::move(s));
        prof.distinct_gaps.push_back(static_cast<std::uint32_t>(tracker.distinct_gap_lengths()));
    }
    return prof;
}

struct RateCheckpoint {
    std::uint64_t n;
    Rational r;
    Rational scaled;
};

struct RateReport {
    std::uint64_t n_min = 1;
    Rational sup_scaled;
    std::uint64_t argmax = 0;
    std::vector<RateCheckpoint> checkpoints;  // n = 2^k in [n_min, N], plus N
};

inline RateReport rate_report(const CoverProfile& profile, std::uint64_t n_min) {
    const std::uint64_t horizon = profile.horizon();
    if (n_min < 1 || n_min > horizon)
        throw Error(ErrorKind::invalid_argument, "rate_report needs 1 <= n_min <= N");
    RateReport rep;
    rep.n_min = n_min;
    for (std::uint64_t n = n_min; n <= horizon; ++n) {
        const Rational& s = profile.scaled[n - 1];
        if (n == n_min || s > rep.sup_scaled) {
            rep.sup_scaled = s;
            rep.argmax = n;
        }
    }
    auto add = [&](std::uint64_t n) { rep.checkpoints.push_back({n, profile.values[n - 1], profile.scaled[n - 1]}); };
    std::uint64_t p = 1;
    while (p < n_min) p <<= 1;
    for (; p <= horizon; p <<= 1) add(p);
    if (rep.checkpoints.empty() || rep.checkpoints.back().n != horizon) add(horizon);
    return rep;
}

}  // namespace shrink
