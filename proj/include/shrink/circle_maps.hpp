#pragma once

/**
 * @file circle_maps.hpp
 * @brief The concrete measure-preserving maps of the circle: rational
 * convergents of rotations, the doubling map, the dyadic odometer (adding
 * machine) and interval exchange transformations.
 *
 * Rotations, IETs and rearrangements are piecewise translations. The odometer
 * has infinitely many branches; set images are computed against a finite
 * truncation deep enough that the set either contains or misses the whole
 * tail [1 - 2^(1-K), 1), which the odometer maps onto [0, 2^(1-K)).
 */

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "shrink/interval_algebra.hpp"

namespace shrink {

// ---------------------------------------------------------------------------
// Continued fractions

/// Finite continued fraction [0; a1, ..., ad] realized as its convergent p/q.
class RotationAngle {
public:
    explicit RotationAngle(std::vector<std::uint64_t> quotients) : quotients_(std::move(quotients)) {
        if (quotients_.empty()) throw Error(ErrorKind::invalid_argument, "rotation needs at least one partial quotient");
        Integer p_prev(1), p(0), q_prev(0), q(1);
        for (std::uint64_t a : quotients_) {
            if (a == 0) throw Error(ErrorKind::invalid_argument, "partial quotients must be >= 1");
            Integer az;
            mpz_set_ui(az.get_mpz_t(), static_cast<unsigned long>(a));
            Integer p_next = az * p + p_prev;
            Integer q_next = az * q + q_prev;
            p_prev = std::move(p);
            p = std::move(p_next);
            q_prev = std::move(q);
            q = std::move(q_next);
        }
        value_ = Rational(p, q);
        if (value_ <= 0 || value_ >= 1)
            throw Error(ErrorKind::invalid_argument, "continued fraction [0; 1] equals 1, not a rotation angle in (0,1)");
    }

    const std::vector<std::uint64_t>& quotients() const noexcept { return quotients_; }
    std::size_t depth() const noexcept { return quotients_.size(); }
    const Rational& value() const noexcept { return value_; }
    Integer denominator() const { return value_.den(); }

private:
    std::vector<std::uint64_t> quotients_;
    Rational value_;
};

inline RotationAngle rotation_from_quotients(std::vector<std::uint64_t> quotients) {
    return RotationAngle(std::move(quotients));
}

/// Euclidean partial quotients of theta in (0,1); the exact expansion ends in a quotient >= 2.
inline std::vector<std::uint64_t> continued_fraction(const Rational& theta,
                                                     std::size_t max_depth = std::numeric_limits<std::size_t>::max()) {
    if (theta <= 0 || theta >= 1)
        throw Error(ErrorKind::invalid_argument, "continued_fraction needs 0 < theta < 1");
    std::vector<std::uint64_t> out;
    Integer num = theta.num();
    Integer den = theta.den();
    while (num != 0 && out.size() < max_depth) {
        Integer a, r;
        mpz_fdiv_qr(a.get_mpz_t(), r.get_mpz_t(), den.get_mpz_t(), num.get_mpz_t());
        if (!a.fits_ulong_p()) throw Error(ErrorKind::invalid_argument, "partial quotient exceeds 64 bits");
        out.push_back(a.get_ui());
        den = std::move(num);
        num = std::move(r);
    }
    return out;
}

/// Deepens a quotient pattern until the convergent denominator reaches N^2
/// (and at least `min_depth` quotients are used). `quotient_at(i)` gives a_{i+1}.
template <class QuotientFn>
RotationAngle rotation_for_horizon(QuotientFn quotient_at, std::uint64_t horizon, std::size_t min_depth = 1) {
    Integer need(horizon);
    need *= need;
    std::vector<std::uint64_t> qs;
    Integer q_prev(0), q(1);
    while (qs.size() < min_depth || q < need) {
        std::uint64_t a = quotient_at(qs.size());
        qs.push_back(a);
        Integer az;
        mpz_set_ui(az.get_mpz_t(), static_cast<unsigned long>(a));
        Integer q_next = az * q + q_prev;
        q_prev = std::move(q);
        q = std::move(q_next);
        if (qs.size() > 100000) throw Error(ErrorKind::horizon, "quotient pattern does not grow the denominator");
    }
    return RotationAngle(std::move(qs));
}

/// Golden-mean convergent [0; 1, 1, ...] with q >= N^2 and depth >= min_depth.
inline RotationAngle golden_rotation(std::uint64_t horizon, std::size_t min_depth = 25) {
    return rotation_for_horizon([](std::size_t) { return std::uint64_t{1}; }, horizon, min_depth);
}

// ---------------------------------------------------------------------------
// Piecewise translations

/// [lo, hi) is moved to [lo + offset, hi + offset), which stays inside [0, 1].
struct TranslationPiece {
    Rational lo;
    Rational hi;
    Rational offset;
};

class PiecewiseTranslation {
public:
    PiecewiseTranslation() = default;

    /// Pieces must partition [0,1) and their images must partition [0,1).
    explicit PiecewiseTranslation(std::vector<TranslationPiece> pieces) {
        std::sort(pieces.begin(), pieces.end(),
                  [](const TranslationPiece& a, const TranslationPiece& b) { return a.lo < b.lo; });
        check_partition(pieces, false);
        forward_ = Table(std::move(pieces));
        backward_ = forward_.reversed();
        check_partition(backward_.pieces, true);
        forward_.link(backward_);
    }

    /// Pieces sorted by domain start.
    const std::vector<TranslationPiece>& pieces() const noexcept { return forward_.pieces; }

    CirclePoint apply(const CirclePoint& x) const {
        const auto& p = forward_.locate(x.value());
        return CirclePoint(x.value() + p.offset);
    }

    CirclePoint apply_inverse(const CirclePoint& x) const {
        const auto& p = backward_.locate(x.value());
        return CirclePoint(x.value() + p.offset);
    }

    PiecewiseTranslation inverse() const {
        PiecewiseTranslation out;
        out.forward_ = backward_;
        out.backward_ = forward_;
        return out;
    }

    ArcSet image(const ArcSet& s) const { return forward_.image(s); }
    ArcSet preimage(const ArcSet& s) const { return backward_.image(s); }

private:
    struct Table {
        std::vector<TranslationPiece> pieces;   // sorted by lo
        std::vector<std::size_t> image_rank;    // rank of each piece's image among all images

        Table() = default;
        explicit Table(std::vector<TranslationPiece> p) : pieces(std::move(p)) {}

        Table reversed() const {
            std::vector<TranslationPiece> inv;
            inv.reserve(pieces.size());
            for (const auto& p : pieces) inv.push_back({p.lo + p.offset, p.hi + p.offset, -p.offset});
            std::sort(inv.begin(), inv.end(),
                      [](const TranslationPiece& a, const TranslationPiece& b) { return a.lo < b.lo; });
            return Table(std::move(inv));
        }

        // Piece i of this table lands where piece image_rank[i] of `other` starts.
        void link(Table& other) {
            image_rank = ranks_into(other.pieces);
            other.image_rank = other.ranks_into(pieces);
        }

        std::vector<std::size_t> ranks_into(const std::vector<TranslationPiece>& targets) const {
            std::vector<std::size_t> rank(pieces.size());
            for (std::size_t i = 0; i < pieces.size(); ++i) {
                Rational img = pieces[i].lo + pieces[i].offset;
                auto it = std::lower_bound(targets.begin(), targets.end(), img,
                                           [](const TranslationPiece& t, const Rational& v) { return t.lo < v; });
                rank[i] = static_cast<std::size_t>(it - targets.begin());
            }
            return rank;
        }

        const TranslationPiece& locate(const Rational& v) const {
            auto it = std::upper_bound(pieces.begin(), pieces.end(), v,
                                       [](const Rational& val, const TranslationPiece& p) { return val < p.lo; });
            if (it == pieces.begin()) throw Error(ErrorKind::invalid_argument, "point outside piecewise translation domain");
            return *(it - 1);
        }

        // Each piece maps a sorted run of segments to a sorted run; runs are
        // concatenated in image order, then abutting neighbours are merged.
        ArcSet image(const ArcSet& s) const {
            struct Tagged {
                std::size_t rank;
                Segment seg;
            };
            std::vector<Tagged> tagged;
            tagged.reserve(s.segments().size() + 4);
            std::size_t k = 0;
            for (const Segment& seg : s.segments()) {
                while (k < pieces.size() && pieces[k].hi <= seg.lo) ++k;
                for (std::size_t i = k; i < pieces.size() && pieces[i].lo < seg.hi; ++i) {
                    const auto& p = pieces[i];
                    const Rational& lo = seg.lo < p.lo ? p.lo : seg.lo;
                    const Rational& hi = seg.hi < p.hi ? seg.hi : p.hi;
                    if (lo < hi) tagged.push_back({image_rank[i], {lo + p.offset, hi + p.offset}});
                }
            }
            // counting pass over ranks keeps each run's internal order
            std::vector<std::size_t> start(pieces.size() + 1, 0);
            for (const auto& t : tagged) ++start[t.rank + 1];
            for (std::size_t r = 1; r < start.size(); ++r) start[r] += start[r - 1];
            std::vector<std::size_t> order(tagged.size());
            for (std::size_t i = 0; i < tagged.size(); ++i) order[start[tagged[i].rank]++] = i;
            std::vector<Segment> out;
            out.reserve(tagged.size());
            for (std::size_t i : order) {
                Segment& seg = tagged[i].seg;
                if (!out.empty() && out.back().hi == seg.lo) out.back().hi = std::move(seg.hi);
                else out.push_back(std::move(seg));
            }
            return ArcSet::from_canonical(std::move(out));
        }
    };

    static void check_partition(const std::vector<TranslationPiece>& pieces, bool images) {
        const char* what = images ? "images" : "pieces";
        if (pieces.empty()) throw Error(ErrorKind::invalid_argument, std::string("piecewise translation has no ") + what);
        Rational cursor(0);
        for (const auto& p : pieces) {
            if (!(p.lo < p.hi)) throw Error(ErrorKind::invalid_argument, std::string("empty translation ") + what);
            if (p.lo != cursor)
                throw Error(ErrorKind::invalid_argument, std::string("translation ") + what + " do not partition [0,1) at " + to_string(cursor));
            cursor = p.hi;
        }
        if (cursor != 1) throw Error(ErrorKind::invalid_argument, std::string("translation ") + what + " do not reach 1");
    }

    Table forward_;
    Table backward_;
};

// ---------------------------------------------------------------------------
// Map families

struct Rotation {
    RotationAngle angle;
};
struct Doubling {};
struct Odometer {};
struct Iet {
    std::vector<Rational> lengths;
    std::vector<std::size_t> perm;  // perm[i] = 1-based output slot of interval i+1
};

using MapVariant = std::variant<Rotation, Doubling, Odometer, Iet>;

namespace detail {

inline PiecewiseTranslation rotation_pieces(const Rational& theta) {
    return PiecewiseTranslation({{Rational(0), 1 - theta, theta}, {1 - theta, Rational(1), theta - 1}});
}

inline PiecewiseTranslation iet_pieces(const Iet& iet) {
    const std::size_t m = iet.lengths.size();
    if (m == 0) throw Error(ErrorKind::invalid_argument, "IET needs at least one interval");
    if (iet.perm.size() != m) throw Error(ErrorKind::invalid_argument, "IET permutation size differs from lengths");
    Rational total(0);
    for (const auto& l : iet.lengths) {
        if (l <= 0) throw Error(ErrorKind::invalid_argument, "IET lengths must be positive");
        total += l;
    }
    if (total != 1) throw Error(ErrorKind::invalid_argument, "IET lengths sum to " + to_string(total) + ", not 1");
    std::vector<bool> seen(m, false);
    for (std::size_t p : iet.perm) {
        if (p < 1 || p > m || seen[p - 1]) throw Error(ErrorKind::invalid_argument, "IET permutation is not a bijection on 1..m");
        seen[p - 1] = true;
    }
    // slot s holds interval slot_owner[s]
    std::vector<std::size_t> owner(m);
    for (std::size_t i = 0; i < m; ++i) owner[iet.perm[i] - 1] = i;
    std::vector<Rational> image_start(m);
    Rational cursor(0);
    for (std::size_t s = 0; s < m; ++s) {
        image_start[owner[s]] = cursor;
        cursor += iet.lengths[owner[s]];
    }
    std::vector<TranslationPiece> pieces;
    Rational lo(0);
    for (std::size_t i = 0; i < m; ++i) {
        Rational hi = lo + iet.lengths[i];
        pieces.push_back({lo, hi, image_start[i] - lo});
        lo = std::move(hi);
    }
    return PiecewiseTranslation(std::move(pieces));
}

/// Odometer branches k = 1..depth-1 plus the tail [1 - 2^(1-depth), 1) -> [0, 2^(1-depth)).
/// Exact pointwise off the tail; on the tail only the set image is right.
inline PiecewiseTranslation odometer_pieces(long depth) {
    std::vector<TranslationPiece> pieces;
    for (long k = 1; k < depth; ++k) {
        Rational lo = 1 - pow2(1 - k);
        Rational hi = 1 - pow2(-k);
        pieces.push_back({std::move(lo), std::move(hi), 3 * pow2(-k) - 1});
    }
    Rational tail = 1 - pow2(1 - depth);
    pieces.push_back({tail, Rational(1), -tail});
    return PiecewiseTranslation(std::move(pieces));
}

// Depth at which every endpoint of s below 1 sits at or below the tail start.
inline long odometer_forward_depth(const ArcSet& s) {
    Rational top(0);
    for (const auto& seg : s.segments()) {
        if (seg.lo < 1 && seg.lo > top) top = seg.lo;
        if (seg.hi < 1 && seg.hi > top) top = seg.hi;
    }
    return 1 + dyadic_depth_below(1 - top);
}

// Depth at which every positive endpoint of s sits at or above 2^(1-depth).
inline long odometer_backward_depth(const ArcSet& s) {
    Rational bottom(1);
    for (const auto& seg : s.segments()) {
        if (seg.lo > 0 && seg.lo < bottom) bottom = seg.lo;
        if (seg.hi > 0 && seg.hi < bottom) bottom = seg.hi;
    }
    return 1 + dyadic_depth_below(bottom);
}

}  // namespace detail

/// An exact map of the circle. Cheap to copy; immutable.
class MapSpec {
public:
    static MapSpec rotation(RotationAngle angle) {
        MapSpec m;
        m.pieces_ = std::make_shared<const PiecewiseTranslation>(detail::rotation_pieces(angle.value()));
        m.variant_ = Rotation{std::move(angle)};
        return m;
    }
    static MapSpec doubling() {
        MapSpec m;
        m.variant_ = Doubling{};
        return m;
    }
    static MapSpec odometer() {
        MapSpec m;
        m.variant_ = Odometer{};
        return m;
    }
    static MapSpec iet(std::vector<Rational> lengths, std::vector<std::size_t> perm) {
        Iet spec{std::move(lengths), std::move(perm)};
        MapSpec m;
        m.pieces_ = std::make_shared<const PiecewiseTranslation>(detail::iet_pieces(spec));
        m.variant_ = std::move(spec);
        return m;
    }

    const MapVariant& variant() const noexcept { return variant_; }
    bool invertible() const noexcept { return !std::holds_alternative<Doubling>(variant_); }

    /// Piecewise translation for Rotation and IET; null otherwise.
    const PiecewiseTranslation* translation() const noexcept { return pieces_.get(); }

    std::string name() const {
        return std::visit(
            [](const auto& v) -> std::string {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Rotation>) return "rotation";
                else if constexpr (std::is_same_v<T, Doubling>) return "doubling";
                else if constexpr (std::is_same_v<T, Odometer>) return "odometer";
                else return "iet";
            },
            variant_);
    }

private:
    MapSpec() = default;

    MapVariant variant_{Doubling{}};
    std::shared_ptr<const PiecewiseTranslation> pieces_;
};

inline CirclePoint odometer_apply(const CirclePoint& x) {
    // x in [1 - 2^(1-k), 1 - 2^-k) for the smallest k with 2^-k < 1 - x
    Rational gap = 1 - x.value();
    long k = dyadic_depth_below(gap);
    if (pow2(-k) == gap) ++k;
    return CirclePoint(x.value() - 1 + 3 * pow2(-k));
}

inline CirclePoint odometer_inverse(const CirclePoint& y) {
    if (y.value() == 0)
        throw Error(ErrorKind::not_invertible, "0 is not an odometer image of a point of [0,1) (its preimage is the all-ones point 1)");
    long k = dyadic_depth_below(y.value());  // 2^-k <= y < 2^(1-k)
    return CirclePoint(y.value() + 1 - 3 * pow2(-k));
}

inline CirclePoint apply(const MapSpec& map, const CirclePoint& x) {
    return std::visit(
        [&](const auto& v) -> CirclePoint {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Doubling>) return CirclePoint(2 * x.value());
            else if constexpr (std::is_same_v<T, Odometer>) return odometer_apply(x);
            else return map.translation()->apply(x);
        },
        map.variant());
}

inline CirclePoint inverse_apply(const MapSpec& map, const CirclePoint& x) {
    return std::visit(
        [&](const auto& v) -> CirclePoint {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Doubling>)
                throw Error(ErrorKind::not_invertible, "the doubling map is 2-to-1 and has no inverse");
            else if constexpr (std::is_same_v<T, Odometer>) return odometer_inverse(x);
            else return map.translation()->apply_inverse(x);
        },
        map.variant());
}

/// Streams tau^1 x, tau^2 x, ... holding only the current point.
class OrbitStepper {
public:
    OrbitStepper(const MapSpec& map, CirclePoint start) : map_(&map), current_(std::move(start)) {}

    const CirclePoint& next() {
        current_ = apply(*map_, current_);
        ++time_;
        return current_;
    }
    const CirclePoint& current() const noexcept { return current_; }
    std::uint64_t time() const noexcept { return time_; }

private:
    const MapSpec* map_;
    CirclePoint current_;
    std::uint64_t time_ = 0;
};

/// (tau^1 x, ..., tau^N x).
inline std::vector<CirclePoint> orbit(const MapSpec& map, const CirclePoint& x, std::uint64_t n) {
    if (n < 1) throw Error(ErrorKind::invalid_argument, "orbit length must be >= 1");
    std::vector<CirclePoint> out;
    out.reserve(n);
    OrbitStepper step(map, x);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(step.next());
    return out;
}

/// Exact tau^-1(S). Measure preserving for every family.
inline ArcSet preimage_set(const MapSpec& map, const ArcSet& s) {
    return std::visit(
        [&](const auto& v) -> ArcSet {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Doubling>) {
                std::vector<Segment> out;
                out.reserve(2 * s.segments().size());
                for (const auto& seg : s.segments()) out.push_back({seg.lo / 2, seg.hi / 2});
                for (const auto& seg : s.segments()) out.push_back({(seg.lo + 1) / 2, (seg.hi + 1) / 2});
                return normalize_segments(std::move(out));
            } else if constexpr (std::is_same_v<T, Odometer>) {
                if (s.empty() || s.is_full()) return s;
                return detail::odometer_pieces(detail::odometer_backward_depth(s)).preimage(s);
            } else {
                return map.translation()->preimage(s);
            }
        },
        map.variant());
}

/// Exact tau(S) for invertible maps.
inline ArcSet image_set(const MapSpec& map, const ArcSet& s) {
    return std::visit(
        [&](const auto& v) -> ArcSet {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Doubling>) {
                throw Error(ErrorKind::unsupported, "image_set is not measure preserving for the doubling map");
            } else if constexpr (std::is_same_v<T, Odometer>) {
                if (s.empty() || s.is_full()) return s;
                return detail::odometer_pieces(detail::odometer_forward_depth(s)).image(s);
            } else {
                return map.translation()->image(s);
            }
        },
        map.variant());
}

/// tau^k(S), k >= 0 (invertible maps).
inline ArcSet image_power(const MapSpec& map, ArcSet s, std::uint64_t k) {
    for (std::uint64_t i = 0; i < k; ++i) s = image_set(map, s);
    return s;
}

/// tau^-k(S), k >= 0.
inline ArcSet preimage_power(const MapSpec& map, ArcSet s, std::uint64_t k) {
    for (std::uint64_t i = 0; i < k; ++i) s = preimage_set(map, s);
    return s;
}

// ---------------------------------------------------------------------------
// Odometer Rokhlin towers

/// Cyclic tower of height 2^K over the base [0, 2^-K); level i is tau^i(base).
struct Tower {
    unsigned exponent = 0;
    std::vector<ArcSet> levels;

    std::uint64_t height() const { return std::uint64_t{1} << exponent; }
    Arc base() const { return Arc(Rational(0), pow2(-static_cast<long>(exponent))); }
};

inline constexpr unsigned kMaxTowerExponent = 24;

/// Bit reversal of the low K bits: level i of the K-tower starts at reverse(i) / 2^K.
inline std::uint64_t reverse_bits(std::uint64_t i, unsigned k) {
    std::uint64_t r = 0;
    for (unsigned b = 0; b < k; ++b) r |= ((i >> b) & 1u) << (k - 1 - b);
    return r;
}

/// Closed form of level i of the odometer K-tower.
inline Segment odometer_level_segment(unsigned k, std::uint64_t i) {
    Rational width = pow2(-static_cast<long>(k));
    Rational lo = Rational(Integer(static_cast<unsigned long>(reverse_bits(i, k)))) * width;
    Rational hi = lo + width;
    return {std::move(lo), std::move(hi)};
}

/// Exact tau^m(S) on the odometer for any integer m (negative m gives tau^-|m|).
/// Each maximal dyadic block of depth d is level i of the d-tower and goes to
/// level i + m mod 2^d. Falls back to iterating when S has non-dyadic or very
/// deep endpoints.
inline ArcSet odometer_power(const ArcSet& s, long long m) {
    if (m == 0 || s.empty() || s.is_full()) return s;
    int depth = 0;
    for (const auto& seg : s.segments()) {
        for (const Rational* v : {&seg.lo, &seg.hi}) {
            auto parts = v->dyadic_parts();
            if (!parts || parts->second > 62) depth = -1;
            else if (depth >= 0) depth = std::max(depth, parts->second);
        }
        if (depth < 0) break;
    }
    const MapSpec odo = MapSpec::odometer();
    if (depth < 0) {
        std::uint64_t steps = static_cast<std::uint64_t>(m < 0 ? -m : m);
        return m > 0 ? image_power(odo, s, steps) : preimage_power(odo, s, steps);
    }
    const int D = std::max(depth, 1);
    auto scaled = [D](const Rational& v) -> std::uint64_t {
        if (v == 1) return std::uint64_t{1} << D;
        auto [n, e] = *v.dyadic_parts();
        return static_cast<std::uint64_t>(n) << (D - e);
    };
    struct Block {
        std::uint64_t lo, hi;
    };
    std::vector<Block> blocks;
    for (const auto& seg : s.segments()) {
        std::uint64_t u = scaled(seg.lo), v = scaled(seg.hi);
        while (u < v) {
            unsigned t = u == 0 ? static_cast<unsigned>(D) : static_cast<unsigned>(std::countr_zero(u));
            while ((std::uint64_t{1} << t) > v - u) --t;
            const unsigned d = static_cast<unsigned>(D) - t;
            std::uint64_t r = u >> t;
            std::uint64_t mask = d == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << d) - 1;
            std::uint64_t level = reverse_bits(r, d);
            std::uint64_t shift = static_cast<std::uint64_t>(m) & mask;  // two's complement gives m mod 2^d
            std::uint64_t r2 = reverse_bits((level + shift) & mask, d);
            blocks.push_back({r2 << t, (r2 + 1) << t});
            u += std::uint64_t{1} << t;
        }
    }
    std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) { return a.lo < b.lo; });
    std::vector<Segment> out;
    std::uint64_t cur_lo = blocks.front().lo, cur_hi = blocks.front().hi;
    auto flush = [&] {
        Rational hi = cur_hi == (std::uint64_t{1} << D) ? Rational(1) : Rational::dyadic(static_cast<long long>(cur_hi), D);
        out.push_back({Rational::dyadic(static_cast<long long>(cur_lo), D), std::move(hi)});
    };
    for (std::size_t i = 1; i < blocks.size(); ++i) {
        if (blocks[i].lo == cur_hi) {
            cur_hi = blocks[i].hi;
        } else {
            flush();
            cur_lo = blocks[i].lo;
            cur_hi = blocks[i].hi;
        }
    }
    flush();
    return ArcSet::from_canonical(std::move(out));
}

inline Tower odometer_tower(unsigned k) {
    if (k < 1 || k > kMaxTowerExponent)
        throw Error(ErrorKind::invalid_argument, "tower exponent must lie in [1, " + std::to_string(kMaxTowerExponent) + "]");
    const MapSpec odo = MapSpec::odometer();
    Tower t;
    t.exponent = k;
    t.levels.reserve(t.height());
    t.levels.push_back(ArcSet::interval(Rational(0), pow2(-static_cast<long>(k))));
    for (std::uint64_t i = 1; i < t.height(); ++i) t.levels.push_back(image_set(odo, t.levels.back()));
    return t;
}

}  // namespace shrink
