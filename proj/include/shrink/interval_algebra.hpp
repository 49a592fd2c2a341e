#pragma once

/**
 * @file interval_algebra.hpp
 * @brief Exact points and finite unions of half-open arcs on the circle [0,1).
 *
 * An ArcSet is kept internally as sorted, pairwise disjoint, non-abutting
 * linear segments [lo, hi) with 0 <= lo < hi <= 1. A set that contains both
 * [0, a) and [b, 1) is the wrapped arc [b, a) on the circle; arcs() reports it
 * that way. Every endpoint is an exact rational.
 */

#include <algorithm>
#include <compare>
#include <span>
#include <utility>
#include <vector>

#include "shrink/error.hpp"
#include "shrink/rational.hpp"

namespace shrink {

/// A point of the circle, reduced mod 1 on construction.
class CirclePoint {
public:
    CirclePoint() = default;
    explicit CirclePoint(const Rational& v) : value_(frac(v)) {}
    CirclePoint(long num, long den) : CirclePoint(make_rational(num, den)) {}

    const Rational& value() const noexcept { return value_; }

    friend bool operator==(const CirclePoint& a, const CirclePoint& b) { return a.value_ == b.value_; }
    friend bool operator<(const CirclePoint& a, const CirclePoint& b) { return a.value_ < b.value_; }

private:
    Rational value_{0};
};

/// Circle distance min(|a-b|, 1-|a-b|).
inline Rational circle_distance(const CirclePoint& a, const CirclePoint& b) {
    Rational d = abs(a.value() - b.value());
    Rational w = 1 - d;
    return d < w ? d : w;
}

/// Half-open arc [start, start + length) mod 1, 0 < length <= 1.
class Arc {
public:
    Arc(CirclePoint start, Rational length) : start_(std::move(start)), length_(std::move(length)) {
        if (length_ <= 0 || length_ > 1)
            throw Error(ErrorKind::invalid_argument, "arc length must lie in (0,1], got " + to_string(length_));
        if (length_ == 1) start_ = CirclePoint();
    }
    Arc(const Rational& start, const Rational& length) : Arc(CirclePoint(start), length) {}

    static Arc full() { return Arc(CirclePoint(), Rational(1)); }

    const CirclePoint& start() const noexcept { return start_; }
    const Rational& length() const noexcept { return length_; }
    Rational end() const { return start_.value() + length_; }
    bool wraps() const { return end() > 1; }
    bool is_full() const { return length_ == 1; }

    friend bool operator==(const Arc& a, const Arc& b) {
        return a.start_ == b.start_ && a.length_ == b.length_;
    }

private:
    CirclePoint start_;
    Rational length_;
};

/// Linear segment [lo, hi) inside [0, 1].
struct Segment {
    Rational lo;
    Rational hi;

    Rational length() const { return hi - lo; }
    friend bool operator==(const Segment& a, const Segment& b) { return a.lo == b.lo && a.hi == b.hi; }
};

class ArcSet;
ArcSet normalize_segments(std::vector<Segment> segments);

/// Canonical finite union of arcs.
class ArcSet {
public:
    ArcSet() = default;

    static ArcSet full() {
        ArcSet s;
        s.segs_.push_back({Rational(0), Rational(1)});
        return s;
    }

    /// The linear interval [lo, hi), 0 <= lo <= hi <= 1 (empty when lo == hi).
    static ArcSet interval(const Rational& lo, const Rational& hi) {
        if (lo < 0 || hi > 1 || lo > hi)
            throw Error(ErrorKind::invalid_argument, "interval [" + to_string(lo) + ", " + to_string(hi) + ") not inside [0,1]");
        ArcSet s;
        if (lo < hi) s.segs_.push_back({lo, hi});
        return s;
    }

    static ArcSet from_arc(const Arc& arc) {
        const Rational& a = arc.start().value();
        Rational b = arc.end();
        if (b <= 1) return interval(a, b);
        return normalize_segments({{Rational(0), b - 1}, {a, Rational(1)}});
    }

    /// Trusted constructor for segment lists already in canonical form.
    static ArcSet from_canonical(std::vector<Segment> segs) {
        ArcSet s;
        s.segs_ = std::move(segs);
        return s;
    }

    const std::vector<Segment>& segments() const noexcept { return segs_; }
    bool empty() const noexcept { return segs_.empty(); }
    bool is_full() const { return segs_.size() == 1 && segs_[0].lo == 0 && segs_[0].hi == 1; }

    /// Number of maximal arcs (a wrapped arc counts once).
    std::size_t arc_count() const {
        if (segs_.size() >= 2 && segs_.front().lo == 0 && segs_.back().hi == 1) return segs_.size() - 1;
        return segs_.size();
    }

    /// Canonical arc list: sorted by start, the wrapped arc (if any) last.
    std::vector<Arc> arcs() const {
        std::vector<Arc> out;
        if (segs_.empty()) return out;
        const bool wrap = segs_.size() >= 2 && segs_.front().lo == 0 && segs_.back().hi == 1;
        std::size_t first = wrap ? 1 : 0;
        std::size_t last = wrap ? segs_.size() - 1 : segs_.size();
        out.reserve(last - first + 1);
        for (std::size_t i = first; i < last; ++i) out.emplace_back(segs_[i].lo, segs_[i].length());
        if (wrap) out.emplace_back(segs_.back().lo, segs_.back().length() + segs_.front().hi);
        return out;
    }

    Rational measure() const {
        Rational m(0);
        for (const auto& s : segs_) m += s.hi - s.lo;
        return m;
    }

    bool contains(const CirclePoint& x) const {
        const Rational& v = x.value();
        auto it = std::upper_bound(segs_.begin(), segs_.end(), v,
                                   [](const Rational& val, const Segment& s) { return val < s.lo; });
        if (it == segs_.begin()) return false;
        --it;
        return v < it->hi;
    }

    friend bool operator==(const ArcSet& a, const ArcSet& b) { return a.segs_ == b.segs_; }

private:
    std::vector<Segment> segs_;
};

/// Sorts and merges arbitrary segments (each with 0 <= lo <= hi <= 1).
inline ArcSet normalize_segments(std::vector<Segment> segments) {
    std::erase_if(segments, [](const Segment& s) { return !(s.lo < s.hi); });
    std::sort(segments.begin(), segments.end(),
              [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
    std::vector<Segment> out;
    out.reserve(segments.size());
    for (auto& s : segments) {
        if (!out.empty() && s.lo <= out.back().hi) {
            if (s.hi > out.back().hi) out.back().hi = std::move(s.hi);
        } else {
            out.push_back(std::move(s));
        }
    }
    return ArcSet::from_canonical(std::move(out));
}

/// Canonical ArcSet equal as a point set to the union of the given arcs.
inline ArcSet normalize(std::span<const Arc> arcs) {
    std::vector<Segment> segs;
    segs.reserve(arcs.size() + 1);
    for (const Arc& a : arcs) {
        const Rational& s = a.start().value();
        Rational e = a.end();
        if (e <= 1) {
            segs.push_back({s, std::move(e)});
        } else {
            segs.push_back({s, Rational(1)});
            segs.push_back({Rational(0), e - 1});
        }
    }
    return normalize_segments(std::move(segs));
}

inline ArcSet normalize(std::initializer_list<Arc> arcs) {
    return normalize(std::span<const Arc>(arcs.begin(), arcs.size()));
}

/// Re-normalizes an existing set (identity on canonical input).
inline ArcSet normalize(const ArcSet& s) { return normalize_segments(s.segments()); }

inline ArcSet unite(const ArcSet& a, const ArcSet& b) {
    const auto& x = a.segments();
    const auto& y = b.segments();
    if (x.empty()) return b;
    if (y.empty()) return a;
    std::vector<Segment> out;
    out.reserve(x.size() + y.size());
    std::size_t i = 0, j = 0;
    auto push = [&out](const Segment& s) {
        if (!out.empty() && s.lo <= out.back().hi) {
            if (s.hi > out.back().hi) out.back().hi = s.hi;
        } else {
            out.push_back(s);
        }
    };
    while (i < x.size() || j < y.size()) {
        if (j == y.size() || (i < x.size() && x[i].lo <= y[j].lo)) push(x[i++]);
        else push(y[j++]);
    }
    return ArcSet::from_canonical(std::move(out));
}

namespace detail {

// Index of the first segment at or after `from` whose hi exceeds v (galloping search).
inline std::size_t first_ending_after(const std::vector<Segment>& segs, std::size_t from, const Rational& v) {
    const std::size_t n = segs.size();
    if (from >= n || v < segs[from].hi) return from;
    std::size_t lo = from, step = 1;
    while (lo + step < n && !(v < segs[lo + step].hi)) {
        lo += step;
        step <<= 1;
    }
    std::size_t hi = std::min(n, lo + step + 1);
    auto it = std::upper_bound(segs.begin() + static_cast<std::ptrdiff_t>(lo + 1), segs.begin() + static_cast<std::ptrdiff_t>(hi), v,
                               [](const Rational& val, const Segment& s) { return val < s.hi; });
    return static_cast<std::size_t>(it - segs.begin());
}

}  // namespace detail

inline ArcSet intersect(const ArcSet& a, const ArcSet& b) {
    const auto* small = &a.segments();
    const auto* large = &b.segments();
    if (small->size() > large->size()) std::swap(small, large);
    std::vector<Segment> out;
    if (small->empty()) return ArcSet();
    std::size_t j = 0;
    for (const Segment& s : *small) {
        j = detail::first_ending_after(*large, j, s.lo);
        for (std::size_t k = j; k < large->size() && (*large)[k].lo < s.hi; ++k) {
            const Rational& lo = s.lo < (*large)[k].lo ? (*large)[k].lo : s.lo;
            const Rational& hi = s.hi < (*large)[k].hi ? s.hi : (*large)[k].hi;
            if (lo < hi) out.push_back({lo, hi});
        }
    }
    // Pieces from distinct segment pairs never abut: the inputs were non-abutting.
    return ArcSet::from_canonical(std::move(out));
}

inline bool disjoint(const ArcSet& a, const ArcSet& b) {
    const auto* small = &a.segments();
    const auto* large = &b.segments();
    if (small->size() > large->size()) std::swap(small, large);
    std::size_t j = 0;
    for (const Segment& s : *small) {
        j = detail::first_ending_after(*large, j, s.lo);
        if (j < large->size() && (*large)[j].lo < s.hi) return false;
    }
    return true;
}

inline ArcSet complement(const ArcSet& a) {
    std::vector<Segment> out;
    Rational cursor(0);
    for (const Segment& s : a.segments()) {
        if (cursor < s.lo) out.push_back({cursor, s.lo});
        cursor = s.hi;
    }
    if (cursor < 1) out.push_back({cursor, Rational(1)});
    return ArcSet::from_canonical(std::move(out));
}

inline ArcSet difference(const ArcSet& a, const ArcSet& b) { return intersect(a, complement(b)); }

inline bool subset(const ArcSet& a, const ArcSet& b) { return disjoint(a, complement(b)); }

inline Rational measure(const ArcSet& a) { return a.measure(); }

inline bool contains(const ArcSet& a, const CirclePoint& x) { return a.contains(x); }

/// Union of many sets in one sort-and-sweep pass.
inline ArcSet unite_all(std::span<const ArcSet> sets) {
    std::vector<Segment> segs;
    for (const auto& s : sets) segs.insert(segs.end(), s.segments().begin(), s.segments().end());
    return normalize_segments(std::move(segs));
}

/// Half-open ball [c - r, c + r); the full circle once 2r >= 1.
inline ArcSet ball(const CirclePoint& center, const Rational& radius) {
    if (radius <= 0) throw Error(ErrorKind::invalid_argument, "ball radius must be positive");
    if (2 * radius >= 1) return ArcSet::full();
    return ArcSet::from_arc(Arc(CirclePoint(center.value() - radius), 2 * radius));
}

/// Sorted gap lengths between circularly consecutive distinct points.
inline std::vector<Rational> circular_gaps(std::span<const CirclePoint> points) {
    if (points.empty()) throw Error(ErrorKind::empty_input, "circular_gaps needs at least one point (no orbit data)");
    std::vector<Rational> v;
    v.reserve(points.size());
    for (const auto& p : points) v.push_back(p.value());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<Rational> gaps;
    gaps.reserve(v.size());
    for (std::size_t i = 1; i < v.size(); ++i) gaps.push_back(v[i] - v[i - 1]);
    gaps.push_back(1 - v.back() + v.front());
    std::sort(gaps.begin(), gaps.end());
    return gaps;
}

}  // namespace shrink
