#pragma once

/**
 * @file constructions.hpp
 * @brief Finite-horizon shrinking-target constructions with exact certificates.
 *
 * Invisible side (almost-invariant sets, slowly sweeping sets, invisible
 * targets) runs on the odometer, whose dyadic Rokhlin towers are exact.
 * Visible side runs on the doubling map: events on disjoint binary digit
 * windows are exactly independent.
 *
 * Each certificate has a `check_*` function that recomputes everything from
 * the stored sets by a different route than the builder used.
 */

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shrink/circle_maps.hpp"
#include "shrink/error.hpp"
#include "shrink/interval_algebra.hpp"
#include "shrink/rational.hpp"
#include "shrink/target_engine.hpp"

namespace shrink {

/// Outcome of re-validating a certificate; `failure` names the first bad row.
struct CheckReport {
    bool ok = true;
    std::string failure;

    void fail(std::string what) {
        if (ok) {
            ok = false;
            failure = std::move(what);
        }
    }
};

namespace detail {

inline constexpr std::uint64_t kMaxTowerLevels = std::uint64_t{1} << 22;

inline Rational integer_rational(std::uint64_t v) { return Rational(Integer(static_cast<unsigned long>(v))); }

/// Union of levels [from, to) of the odometer K-tower.
inline ArcSet tower_levels(unsigned k, std::uint64_t from, std::uint64_t to) {
    std::vector<Segment> segs;
    segs.reserve(to - from);
    for (std::uint64_t i = from; i < to; ++i) {
        auto r = static_cast<long long>(reverse_bits(i, k));
        Rational hi = r + 1 == (1LL << k) ? Rational(1) : Rational::dyadic(r + 1, static_cast<int>(k));
        segs.push_back({Rational::dyadic(r, static_cast<int>(k)), std::move(hi)});
    }
    return normalize_segments(std::move(segs));
}

/// Intersection of tau^k(A) over 0 <= k < count, by binary doubling on the odometer.
inline ArcSet orbit_intersection(const ArcSet& a, std::uint64_t count) {
    // P(t) = cap_{k<t} tau^k A;  P(s + t) = P(s) cap tau^s P(t)
    ArcSet result = ArcSet::full();
    std::uint64_t done = 0;
    ArcSet power = a;  // P(2^b)
    std::uint64_t span = 1;
    for (std::uint64_t rest = count; rest; rest >>= 1) {
        if (rest & 1) {
            result = intersect(result, odometer_power(power, static_cast<long long>(done)));
            done += span;
        }
        if (rest > 1) {
            power = intersect(power, odometer_power(power, static_cast<long long>(span)));
            span <<= 1;
        }
    }
    return result;
}

/// Union of tau^k(E) over 1 <= k <= count, by binary doubling on the odometer.
inline ArcSet orbit_union(const ArcSet& e, std::uint64_t count) {
    ArcSet result;
    std::uint64_t done = 0;
    ArcSet power = odometer_power(e, 1);  // cup_{1<=k<=2^b} tau^k E
    std::uint64_t span = 1;
    for (std::uint64_t rest = count; rest; rest >>= 1) {
        if (rest & 1) {
            result = unite(result, odometer_power(power, static_cast<long long>(done)));
            done += span;
        }
        if (rest > 1) {
            power = unite(power, odometer_power(power, static_cast<long long>(span)));
            span <<= 1;
        }
    }
    return result;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Almost-invariant sets

struct AlmostInvariantCert {
    ArcSet A;
    Rational delta;
    Rational epsilon;
    std::uint64_t n = 0;
    unsigned K = 0;
    std::uint64_t levels = 0;  // A = levels 0..levels-1 of the K-tower
    ArcSet intersection;       // A cap tau A cap ... cap tau^n A
    Rational intersection_measure;

    bool passed() const { return A.measure() == delta && intersection_measure >= (1 - epsilon) * delta; }
};

/// A of measure delta with m(A cap tau A cap ... cap tau^n A) >= (1 - epsilon) delta on the odometer.
inline AlmostInvariantCert almost_invariant_set(std::uint64_t n, const Rational& delta, const Rational& epsilon) {
    if (n < 1) throw Error(ErrorKind::invalid_argument, "almost_invariant_set needs n >= 1");
    if (delta <= 0 || delta >= 1) throw Error(ErrorKind::invalid_argument, "delta must lie in (0,1)");
    if (!is_dyadic(delta)) throw Error(ErrorKind::invalid_argument, "delta must be dyadic, got " + to_string(delta));
    if (epsilon <= 0 || epsilon > 1) throw Error(ErrorKind::invalid_argument, "epsilon must lie in (0,1]");
    unsigned k = static_cast<unsigned>(mpz_sizeinbase(delta.den().get_mpz_t(), 2) - 1);
    if (k < 1) k = 1;
    const Rational target = epsilon * delta;
    const Rational nr = detail::integer_rational(n);
    while (nr / pow2(k) > target) {
        if (++k > 62) throw Error(ErrorKind::infeasible, "almost-invariant tower would need more than 62 binary levels");
    }
    Rational levels_r = delta * pow2(k);
    if (levels_r.den() != 1 || !levels_r.num().fits_ulong_p() || levels_r.num().get_ui() > detail::kMaxTowerLevels)
        throw Error(ErrorKind::infeasible, "almost-invariant set needs " + to_string(levels_r) + " tower levels (limit 2^22)");
    AlmostInvariantCert c;
    c.delta = delta;
    c.epsilon = epsilon;
    c.n = n;
    c.K = k;
    c.levels = levels_r.num().get_ui();
    c.A = detail::tower_levels(k, 0, c.levels);
    c.intersection = detail::orbit_intersection(c.A, n + 1);
    c.intersection_measure = c.intersection.measure();
    return c;
}

/// Recomputes the intersection by n single steps of image_set.
inline CheckReport check_almost_invariant(const AlmostInvariantCert& c) {
    CheckReport r;
    const MapSpec odo = MapSpec::odometer();
    if (c.A.measure() != c.delta) r.fail("measure(A) = " + to_string(c.A.measure()) + " differs from delta " + to_string(c.delta));
    ArcSet inter = c.A, cur = c.A;
    for (std::uint64_t k = 1; k <= c.n && !inter.empty(); ++k) {
        cur = image_set(odo, cur);
        inter = intersect(inter, cur);
    }
    if (inter != c.intersection) r.fail("intersection set differs from the recomputed one");
    if (inter.measure() != c.intersection_measure)
        r.fail("intersection measure " + to_string(c.intersection_measure) + " differs from recomputed " + to_string(inter.measure()));
    if (inter.measure() < (1 - c.epsilon) * c.delta) r.fail("intersection measure below (1 - epsilon) delta");
    return r;
}

// ---------------------------------------------------------------------------
// Slowly sweeping sets

/// One stage j of the gamma / N_j schedule.
struct SweepEpoch {
    unsigned j = 0;
    Rational gamma;            // m(A_j)
    std::uint64_t start = 0;   // N_j
    std::uint64_t next = 0;    // N_{j+1}, or 0 when it lies beyond the horizon
    std::uint64_t n = 0;       // almost-invariance length used for A_j
    unsigned K = 0;
    ArcSet A;
};

/// gamma_1 = 2 eps_1 (rounded up to a dyadic if needed), gamma_j = dyadic floor of
/// (1 - 2 eps_1) 2^-j / 2 for j >= 2, N_1 = 1 and N_j the least index after N_{j-1}
/// with 2 eps_{N_j} <= gamma_j. Stops at the first N_j beyond the horizon.
inline std::vector<SweepEpoch> sweep_schedule(const RateSeq& rates, std::uint64_t horizon) {
    if (horizon < 1) throw Error(ErrorKind::invalid_argument, "sweep horizon must be >= 1");
    rates.validate(horizon);
    const Rational e1 = rates.at(1);
    if (e1 >= Rational(1, 2))
        throw Error(ErrorKind::infeasible, "eps_1 = " + to_string(e1) + " is not below 1/2, no gamma schedule exists");
    const Rational slack = 1 - 2 * e1;
    Rational g1 = 2 * e1;
    if (!is_dyadic(g1)) {
        long grid = dyadic_depth_below(slack / 4);
        Rational scale = pow2(grid);
        g1 = Rational(ceil(g1 * scale), Integer(1)) / scale;
    }
    std::vector<SweepEpoch> out;
    out.push_back({1, g1, 1, 0, 0, 0, {}});
    for (unsigned j = 2;; ++j) {
        Rational gj = dyadic_floor(slack * pow2(-static_cast<long>(j)) / 2);
        std::uint64_t nj = 0;
        for (std::uint64_t n = out.back().start + 1; n <= horizon; ++n)
            if (2 * rates.at(n) <= gj) {
                nj = n;
                break;
            }
        if (nj == 0) break;
        out.back().next = nj;
        out.push_back({j, gj, nj, 0, 0, 0, {}});
    }
    for (auto& ep : out) {
        ep.n = ep.next ? ep.next : horizon;
        AlmostInvariantCert a = almost_invariant_set(ep.n, ep.gamma, Rational(1, 2));
        ep.K = a.K;
        ep.A = std::move(a.A);
    }
    return out;
}

struct SweepRow {
    std::uint64_t M = 0;
    Rational eps;
    Rational measure;  // m(tau E u ... u tau^M E)
    Rational bound;    // 1 - eps_M
    bool passed = false;
};

struct SweepCert {
    std::uint64_t horizon = 0;
    std::vector<SweepEpoch> epochs;
    ArcSet E;
    std::vector<SweepRow> rows;

    bool passed() const {
        if (E.measure() <= 0) return false;
        return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.passed; });
    }
};

/// E = complement of the union of the A_j, with rows m(cup_{k<=M} tau^k E) <= 1 - eps_M.
/// The union is measured through its complement D_M = cap_{k<=M} tau^k(X \ E),
/// updated as D_M = tau((X \ E) cap D_{M-1}).
inline SweepCert slow_sweep_complement(const RateSeq& rates, std::uint64_t horizon) {
    SweepCert c;
    c.horizon = horizon;
    c.epochs = sweep_schedule(rates, horizon);
    std::vector<ArcSet> parts;
    for (const auto& ep : c.epochs) parts.push_back(ep.A);
    const ArcSet a = unite_all(parts);
    c.E = complement(a);
    const MapSpec odo = MapSpec::odometer();
    ArcSet d = image_set(odo, a);
    c.rows.reserve(horizon);
    for (std::uint64_t m = 1; m <= horizon; ++m) {
        if (m > 1) d = image_set(odo, intersect(a, d));
        SweepRow row;
        row.M = m;
        row.eps = rates.at(m);
        row.measure = 1 - d.measure();
        row.bound = 1 - row.eps;
        row.passed = row.measure <= row.bound;
        c.rows.push_back(std::move(row));
    }
    return c;
}

/// Re-derives E from the stored A_j and the rows from forward images of E.
inline CheckReport check_sweep(const SweepCert& c, const RateSeq* rates = nullptr) {
    CheckReport r;
    std::vector<ArcSet> parts;
    for (const auto& ep : c.epochs) {
        if (ep.A.measure() != ep.gamma)
            r.fail("epoch " + std::to_string(ep.j) + ": measure(A_j) differs from gamma_j");
        parts.push_back(ep.A);
    }
    if (complement(unite_all(parts)) != c.E) r.fail("E is not the complement of the union of the A_j");
    if (c.E.measure() <= 0) r.fail("measure(E) is not positive");
    if (c.rows.size() != c.horizon) r.fail("row count differs from the horizon");
    const MapSpec odo = MapSpec::odometer();
    ArcSet img = c.E, u;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        const SweepRow& row = c.rows[i];
        const std::string tag = "row M=" + std::to_string(row.M);
        if (row.M != i + 1) {
            r.fail(tag + ": rows out of order");
            break;
        }
        img = image_set(odo, img);
        u = unite(u, img);
        Rational mu = u.measure();
        if (rates && rates->at(row.M) != row.eps) r.fail(tag + ": eps differs from the rate schedule");
        if (row.bound != 1 - row.eps) r.fail(tag + ": bound is not 1 - eps");
        if (mu != row.measure) r.fail(tag + ": recorded measure " + to_string(row.measure) + " but recomputed " + to_string(mu));
        if (!(mu <= row.bound)) r.fail(tag + ": measure exceeds 1 - eps");
        if (row.passed != (mu <= row.bound)) r.fail(tag + ": pass flag disagrees");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Invisible targets

struct InvisibleEpoch {
    unsigned j = 0;
    std::uint64_t first = 0;  // rows first..last use E_M = E
    std::uint64_t last = 0;
    ArcSet E;  // complement of the union of A_l, l >= j
};

struct InvisibleRow {
    std::uint64_t M = 0;
    unsigned epoch = 0;
    Rational eps;
    Rational measure_B;
    Rational measure_E;
    bool disjoint = false;  // tau^k(E_M) cap B_M empty for all 1 <= k <= M
    bool nested = false;    // B_M inside B_{M-1}
    bool passed = false;
};

struct InvisibleTargetCert {
    std::uint64_t horizon = 0;
    std::vector<SweepEpoch> schedule;
    std::vector<InvisibleEpoch> epochs;
    std::vector<InvisibleRow> rows;
    std::map<std::uint64_t, ArcSet> stored_B;  // explicit B_M for the stored rows

    bool nested() const {
        return std::all_of(rows.begin(), rows.end(), [](const InvisibleRow& r) { return r.nested; });
    }
    bool passed() const {
        return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const InvisibleRow& r) { return r.passed; });
    }
};

/// B_M = X \ cup_{k<=M} tau^k(E_M), where E_M drops the A_l with l below the epoch of M.
/// B_M is built as the intersection of tau^k(X \ E_M). Disjointness is checked
/// against tau^k(E_M) directly for k in the epoch and against the bulk union for
/// earlier k; nesting B_M inside B_{M-1} extends both checks to every k <= M.
inline InvisibleTargetCert invisible_target(const RateSeq& rates, std::uint64_t horizon,
                                            std::uint64_t store_sets_through = 64) {
    InvisibleTargetCert c;
    c.horizon = horizon;
    c.schedule = sweep_schedule(rates, horizon);
    const MapSpec odo = MapSpec::odometer();
    std::optional<ArcSet> prev_b;
    for (std::size_t idx = 0; idx < c.schedule.size(); ++idx) {
        const SweepEpoch& ep = c.schedule[idx];
        std::vector<ArcSet> parts;
        for (std::size_t l = idx; l < c.schedule.size(); ++l) parts.push_back(c.schedule[l].A);
        const ArcSet a = unite_all(parts);
        InvisibleEpoch ie;
        ie.j = ep.j;
        ie.first = ep.start;
        ie.last = ep.next ? std::min(ep.next - 1, horizon) : horizon;
        ie.E = complement(a);
        const Rational measure_e = ie.E.measure();

        ArcSet d = odometer_power(detail::orbit_intersection(a, ie.first), 1);
        bool early_ok = true;
        if (ie.first > 1) early_ok = disjoint(detail::orbit_union(ie.E, ie.first - 1), d);
        ArcSet img = odometer_power(ie.E, static_cast<long long>(ie.first));
        bool chain_ok = early_ok;
        for (std::uint64_t m = ie.first; m <= ie.last; ++m) {
            if (m > ie.first) {
                d = image_set(odo, intersect(a, d));
                img = image_set(odo, img);
            }
            InvisibleRow row;
            row.M = m;
            row.epoch = ep.j;
            row.eps = rates.at(m);
            row.measure_B = d.measure();
            row.measure_E = measure_e;
            row.nested = !prev_b || subset(d, *prev_b);
            chain_ok = chain_ok && disjoint(img, d) && (m == ie.first || row.nested);
            row.disjoint = chain_ok;
            row.passed = row.disjoint && row.nested && row.measure_B >= row.eps;
            if (m <= store_sets_through || m == horizon) c.stored_B.emplace(m, d);
            c.rows.push_back(std::move(row));
            prev_b = d;
        }
        c.epochs.push_back(std::move(ie));
    }
    return c;
}

/// Recomputes every B_M as the complement of the forward union of tau^k(E_M).
inline CheckReport check_invisible_target(const InvisibleTargetCert& c, const RateSeq* rates = nullptr) {
    CheckReport r;
    if (c.epochs.size() != c.schedule.size()) r.fail("epoch count differs from the schedule");
    for (const auto& ep : c.schedule)
        if (ep.A.measure() != ep.gamma) r.fail("epoch " + std::to_string(ep.j) + ": measure(A_j) differs from gamma_j");
    const MapSpec odo = MapSpec::odometer();
    std::size_t row_idx = 0;
    std::optional<ArcSet> prev_b;
    Rational prev_e(0);
    for (std::size_t idx = 0; idx < c.epochs.size() && idx < c.schedule.size(); ++idx) {
        const InvisibleEpoch& ie = c.epochs[idx];
        std::vector<ArcSet> parts;
        for (std::size_t l = idx; l < c.schedule.size(); ++l) parts.push_back(c.schedule[l].A);
        if (complement(unite_all(parts)) != ie.E)
            r.fail("epoch " + std::to_string(ie.j) + ": E_M is not the complement of the tail union of A_l");
        const Rational me = ie.E.measure();
        if (me < prev_e) r.fail("epoch " + std::to_string(ie.j) + ": measure(E_M) decreases");
        prev_e = me;
        ArcSet u = detail::orbit_union(ie.E, ie.first);
        ArcSet img = odometer_power(ie.E, static_cast<long long>(ie.first));
        for (std::uint64_t m = ie.first; m <= ie.last; ++m, ++row_idx) {
            if (row_idx >= c.rows.size()) {
                r.fail("missing row M=" + std::to_string(m));
                return r;
            }
            const InvisibleRow& row = c.rows[row_idx];
            const std::string tag = "row M=" + std::to_string(m);
            if (row.M != m) {
                r.fail(tag + ": rows out of order");
                return r;
            }
            if (m > ie.first) {
                img = image_set(odo, img);
                u = unite(u, img);
            }
            ArcSet b = complement(u);
            Rational mb = b.measure();
            if (mb != row.measure_B) r.fail(tag + ": recorded measure(B_M) " + to_string(row.measure_B) + " but recomputed " + to_string(mb));
            if (row.measure_E != me) r.fail(tag + ": recorded measure(E_M) differs");
            if (rates && rates->at(m) != row.eps) r.fail(tag + ": eps differs from the rate schedule");
            if (mb < row.eps) r.fail(tag + ": measure(B_M) below eps_M");
            if (auto it = c.stored_B.find(m); it != c.stored_B.end() && it->second != b)
                r.fail(tag + ": stored B_M differs from the recomputed set");
            bool nested = !prev_b || subset(b, *prev_b);
            if (!nested) r.fail(tag + ": B_M is not inside B_{M-1}");
            if (!row.disjoint || !row.nested || !row.passed) r.fail(tag + ": row flags report a failed check");
            prev_b = std::move(b);
        }
    }
    if (row_idx != c.rows.size()) r.fail("extra rows beyond the epochs");
    if (c.rows.size() != c.horizon) r.fail("row count differs from the horizon");
    return r;
}

// ---------------------------------------------------------------------------
// Visible targets on the doubling map

/// Rational bounds lo <= e^-j <= hi from alternating Taylor partial sums of e^-1.
inline std::pair<Rational, Rational> exp_neg_bounds(unsigned j) {
    Rational term(1), sum(1), lower, upper;
    for (long k = 1; k <= 25; ++k) {
        term = term / Rational(k);
        if (k % 2) sum -= term;
        else sum += term;
        if (k == 24) upper = sum;  // ends on a positive term
        if (k == 25) lower = sum;  // ends on a negative term
    }
    Rational lo(1), hi(1);
    for (unsigned i = 0; i < j; ++i) {
        lo *= lower;
        hi *= upper;
    }
    return {lo, hi};
}

struct VisibleIndex {
    std::uint64_t n = 0;
    unsigned m = 0;  // B_n = [0, 2^-m), digit window [n+1, n+m]
};

struct VisibleBlock {
    unsigned j = 0;
    std::vector<VisibleIndex> indices;
    Rational sum;      // sum of m(B_n) over the block
    Rational product;  // prod of (1 - m(B_n)): exact miss probability
    Rational exp_lower;
    Rational exp_upper;
    bool windows_disjoint = false;
    std::optional<Rational> direct_miss;  // 1 - m(cup tau^-n B_n) when small enough to expand

    bool passed() const {
        return windows_disjoint && sum >= Rational(static_cast<long>(j)) && product <= exp_lower &&
               (!direct_miss || *direct_miss == product);
    }
};

/// m_n for n = 1..count as runs of equal values.
struct MRun {
    unsigned m = 0;
    std::uint64_t count = 0;
};

struct VisibleTargetCert {
    std::vector<VisibleBlock> blocks;
    std::vector<MRun> m_runs;   // covers n = 1..scanned
    std::uint64_t scanned = 0;  // last index emitted
    bool nested = false;        // m_n nondecreasing, so B_n nested
    bool bracket = false;       // eps_n / 2 < 2^-m_n <= eps_n

    unsigned m_at(std::uint64_t n) const {
        for (const auto& run : m_runs) {
            if (n <= run.count) return run.m;
            n -= run.count;
        }
        throw Error(ErrorKind::horizon, "visible target defined only up to n = " + std::to_string(scanned));
    }
    /// B_1 .. B_N.
    std::vector<ArcSet> target_table(std::uint64_t horizon) const {
        std::vector<ArcSet> out;
        out.reserve(horizon);
        for (std::uint64_t n = 1; n <= horizon; ++n) out.push_back(ArcSet::interval(Rational(0), pow2(-static_cast<long>(m_at(n)))));
        return out;
    }
    bool passed() const {
        return nested && bracket && !blocks.empty() &&
               std::all_of(blocks.begin(), blocks.end(), [](const VisibleBlock& b) { return b.passed(); });
    }
};

inline constexpr std::uint64_t kDefaultVisibleScan = std::uint64_t{1} << 20;
inline constexpr unsigned kDirectMissSpan = 16;

namespace detail {

inline unsigned dyadic_exponent(const Rational& eps) {
    return eps >= 1 ? 0u : static_cast<unsigned>(dyadic_depth_below(eps));
}

// 1 - m(cup_{n in I} tau^-(n - n_first) B_n) on the doubling map.
inline Rational direct_block_miss(const std::vector<VisibleIndex>& idx) {
    const MapSpec dbl = MapSpec::doubling();
    std::vector<std::pair<std::uint64_t, ArcSet>> table;
    const std::uint64_t base = idx.front().n;
    for (const auto& v : idx)
        table.emplace_back(v.n - base, ArcSet::interval(Rational(0), pow2(-static_cast<long>(v.m))));
    return 1 - preimage_union(dbl, table).measure;
}

inline void fill_block(VisibleBlock& b) {
    b.sum = Rational(0);
    b.product = Rational(1);
    std::uint64_t end = 0;
    b.windows_disjoint = true;
    for (const auto& v : b.indices) {
        Rational p = pow2(-static_cast<long>(v.m));
        b.sum += p;
        b.product *= 1 - p;
        if (v.m > 0) {
            if (v.n + 1 <= end) b.windows_disjoint = false;
            end = std::max(end, v.n + v.m);
        }
    }
    auto [lo, hi] = exp_neg_bounds(b.j);
    b.exp_lower = lo;
    b.exp_upper = hi;
    b.direct_miss.reset();
    if (!b.indices.empty() && end - b.indices.front().n <= kDirectMissSpan) b.direct_miss = direct_block_miss(b.indices);
}

}  // namespace detail

/// Greedy block builder: scan n = 1, 2, ...; admit n to block j when its digit
/// window [n+1, n+m_n] misses the windows already admitted to the block; close
/// block j once the admitted masses reach j.
inline VisibleTargetCert visible_target_dyadic(const RateSeq& rates, unsigned blocks,
                                               std::uint64_t max_scan = kDefaultVisibleScan) {
    if (blocks < 1) throw Error(ErrorKind::invalid_argument, "visible_target_dyadic needs J >= 1");
    if (auto d = rates.diverges(); d && !*d)
        throw Error(ErrorKind::invalid_argument, "rates " + rates.describe() + " are summable; no visible target can be certified");
    VisibleTargetCert c;
    c.nested = true;
    c.bracket = true;
    VisibleBlock cur;
    cur.j = 1;
    Rational sum(0);
    std::uint64_t window_end = 0;
    unsigned prev_m = 0;
    Rational prev_eps;
    std::uint64_t n = 0;
    while (c.blocks.size() < blocks) {
        ++n;
        const std::uint64_t lim = rates.limit();
        if (n > max_scan || (lim != 0 && n > lim)) {
            throw Error(ErrorKind::infeasible,
                        "cannot reach block sum: block " + std::to_string(cur.j) + " has mass " + to_decimal(sum, 6) +
                            " < " + std::to_string(cur.j) + " after scanning n <= " + std::to_string(n - 1) + " for rates " +
                            rates.describe() + "; disjoint digit windows gather at most 1/(2m) mass from n in (2^(m-1), 2^m]");
        }
        Rational eps = rates.at(n);
        unsigned m = detail::dyadic_exponent(eps);
        if (n > 1 && (m < prev_m || eps > prev_eps)) c.nested = false;
        Rational p = pow2(-static_cast<long>(m));
        if (!(p <= eps && (eps >= 1 || 2 * p > eps))) c.bracket = false;
        if (c.m_runs.empty() || c.m_runs.back().m != m) c.m_runs.push_back({m, 0});
        ++c.m_runs.back().count;
        prev_m = m;
        prev_eps = eps;
        if (m == 0 || n + 1 > window_end) {
            cur.indices.push_back({n, m});
            sum += p;
            if (m > 0) window_end = n + m;
        }
        if (sum >= Rational(static_cast<long>(cur.j))) {
            detail::fill_block(cur);
            c.blocks.push_back(std::move(cur));
            cur = VisibleBlock{};
            cur.j = static_cast<unsigned>(c.blocks.size() + 1);
            sum = Rational(0);
            window_end = 0;
        }
    }
    c.scanned = n;
    return c;
}

/// Recomputes block sums, products, window disjointness and nesting; with rates, also the bracket.
inline CheckReport check_visible_target(const VisibleTargetCert& c, const RateSeq* rates = nullptr) {
    CheckReport r;
    std::uint64_t total = 0;
    unsigned prev = 0;
    for (const auto& run : c.m_runs) {
        if (run.count == 0) r.fail("empty m run");
        if (total > 0 && run.m < prev) r.fail("m_n decreases at n = " + std::to_string(total + 1) + ": targets not nested");
        prev = run.m;
        total += run.count;
    }
    if (total != c.scanned) r.fail("m runs cover " + std::to_string(total) + " indices, scanned " + std::to_string(c.scanned));
    if (rates) {
        std::uint64_t n = 0;
        for (const auto& run : c.m_runs)
            for (std::uint64_t i = 0; i < run.count; ++i) {
                ++n;
                Rational eps = rates->at(n);
                Rational p = pow2(-static_cast<long>(run.m));
                if (!(p <= eps && (eps >= 1 || 2 * p > eps))) {
                    r.fail("n=" + std::to_string(n) + ": m(B_n) outside (eps_n/2, eps_n]");
                    break;
                }
            }
    }
    std::uint64_t last_n = 0;
    for (std::size_t b = 0; b < c.blocks.size(); ++b) {
        const VisibleBlock& blk = c.blocks[b];
        const std::string tag = "block j=" + std::to_string(blk.j);
        if (blk.j != b + 1) r.fail(tag + ": blocks out of order");
        VisibleBlock re;
        re.j = blk.j;
        re.indices = blk.indices;
        for (const auto& v : blk.indices) {
            if (v.n <= last_n) r.fail(tag + ": indices not increasing across the scan");
            last_n = v.n;
            if (v.n > c.scanned || c.m_at(v.n) != v.m) r.fail(tag + ": index n=" + std::to_string(v.n) + " has the wrong m");
        }
        detail::fill_block(re);
        if (!re.windows_disjoint) r.fail(tag + ": digit windows overlap");
        if (re.sum != blk.sum) r.fail(tag + ": recorded sum " + to_string(blk.sum) + " but recomputed " + to_string(re.sum));
        if (re.product != blk.product) r.fail(tag + ": recorded product " + to_string(blk.product) + " but recomputed " + to_string(re.product));
        if (re.sum < Rational(static_cast<long>(blk.j))) r.fail(tag + ": block sum below j");
        if (!(re.product <= re.exp_lower)) r.fail(tag + ": product exceeds the lower bound for e^-j");
        if (re.direct_miss && *re.direct_miss != re.product) r.fail(tag + ": direct miss measure differs from the product");
        if (blk.direct_miss && (!re.direct_miss || *blk.direct_miss != *re.direct_miss)) r.fail(tag + ": recorded direct miss measure differs");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Generic small sweep

struct SmallSweepRow {
    std::uint64_t n = 0;
    Rational measure;          // m(cup_{k=1..n} tau^-k E)
    Rational witness_measure;  // m(E_n)
    bool witness_disjoint = false;
    bool passed = false;
};

struct SmallSweepCert {
    Rational epsilon;
    Rational budget;  // sum n m(E_n)
    std::vector<ArcSet> seeds;
    ArcSet E;
    Rational measure_E;
    std::vector<SmallSweepRow> rows;

    bool passed() const {
        return budget <= epsilon && measure_E >= 1 - epsilon &&
               std::all_of(rows.begin(), rows.end(), [](const SmallSweepRow& r) { return r.passed; });
    }
};

inline Rational seed_budget(std::span<const ArcSet> seeds) {
    Rational b(0);
    for (std::size_t i = 0; i < seeds.size(); ++i) b += detail::integer_rational(i + 1) * seeds[i].measure();
    return b;
}

/// E = X \ cup_n cup_{k=1..n} tau^k(E_n). E_n misses cup_{k<=n} tau^-k(E), which
/// keeps that union below full measure.
inline SmallSweepCert generic_small_sweep(std::vector<ArcSet> seeds, const MapSpec& map, const Rational& epsilon) {
    if (!map.invertible()) throw Error(ErrorKind::unsupported, "generic_small_sweep needs an invertible map");
    if (epsilon <= 0 || epsilon >= 1) throw Error(ErrorKind::invalid_argument, "epsilon must lie in (0,1)");
    for (std::size_t i = 0; i < seeds.size(); ++i)
        if (seeds[i].empty()) throw Error(ErrorKind::invalid_argument, "seed E_" + std::to_string(i + 1) + " has measure 0");
    SmallSweepCert c;
    c.epsilon = epsilon;
    c.budget = seed_budget(seeds);
    if (c.budget > epsilon)
        throw Error(ErrorKind::infeasible, "budget exceeded: sum n m(E_n) = " + to_string(c.budget) + " > epsilon = " + to_string(epsilon));
    std::vector<Segment> bad;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        ArcSet img = seeds[i];
        for (std::size_t k = 1; k <= i + 1; ++k) {
            img = image_set(map, img);
            bad.insert(bad.end(), img.segments().begin(), img.segments().end());
        }
    }
    c.E = complement(normalize_segments(std::move(bad)));
    c.measure_E = c.E.measure();
    ArcSet pre = c.E, w;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        pre = preimage_set(map, pre);
        w = unite(w, pre);
        SmallSweepRow row;
        row.n = i + 1;
        row.measure = w.measure();
        row.witness_measure = seeds[i].measure();
        row.witness_disjoint = disjoint(seeds[i], w);
        row.passed = row.witness_disjoint && row.measure <= 1 - row.witness_measure && row.measure < 1;
        c.rows.push_back(std::move(row));
    }
    c.seeds = std::move(seeds);
    return c;
}

inline CheckReport check_small_sweep(const SmallSweepCert& c, const MapSpec& map) {
    CheckReport r;
    Rational b = seed_budget(c.seeds);
    if (b != c.budget) r.fail("recorded budget " + to_string(c.budget) + " but recomputed " + to_string(b));
    if (b > c.epsilon) r.fail("budget exceeds epsilon");
    // tau^k(E_n) misses E iff E_n misses tau^-k(E)
    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
        ArcSet pre = c.E;
        for (std::size_t k = 1; k <= i + 1; ++k) {
            pre = preimage_set(map, pre);
            if (!disjoint(pre, c.seeds[i])) r.fail("tau^" + std::to_string(k) + "(E_" + std::to_string(i + 1) + ") meets E");
        }
    }
    if (c.E.measure() != c.measure_E) r.fail("recorded measure(E) differs");
    if (c.measure_E < 1 - c.epsilon) r.fail("measure(E) below 1 - epsilon");
    if (c.rows.size() != c.seeds.size()) r.fail("row count differs from the seed count");
    ArcSet pre = c.E;
    std::vector<Segment> acc;
    for (std::size_t i = 0; i < c.rows.size() && i < c.seeds.size(); ++i) {
        const SmallSweepRow& row = c.rows[i];
        const std::string tag = "row n=" + std::to_string(i + 1);
        pre = preimage_set(map, pre);
        acc.insert(acc.end(), pre.segments().begin(), pre.segments().end());
        ArcSet w = normalize_segments(acc);
        if (w.measure() != row.measure) r.fail(tag + ": recorded measure " + to_string(row.measure) + " but recomputed " + to_string(w.measure()));
        if (!(w.measure() < 1)) r.fail(tag + ": union has full measure");
        if (!disjoint(w, c.seeds[i])) r.fail(tag + ": witness E_n meets the union");
        if (!row.passed) r.fail(tag + ": pass flag false");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Rearrangements

/// Measure-preserving piecewise translation sigma of the circle.
class Rearrangement {
public:
    Rearrangement() : sigma_({{Rational(0), Rational(1), Rational(0)}}) {}
    explicit Rearrangement(PiecewiseTranslation sigma) : sigma_(std::move(sigma)) {}

    static Rearrangement identity() { return Rearrangement(); }

    const std::vector<TranslationPiece>& pieces() const noexcept { return sigma_.pieces(); }
    const PiecewiseTranslation& translation() const noexcept { return sigma_; }

    CirclePoint apply(const CirclePoint& x) const { return sigma_.apply(x); }
    CirclePoint apply_inverse(const CirclePoint& x) const { return sigma_.apply_inverse(x); }
    ArcSet image(const ArcSet& s) const { return sigma_.image(s); }
    ArcSet preimage(const ArcSet& s) const { return sigma_.preimage(s); }

private:
    PiecewiseTranslation sigma_;
};

/// sigma with sigma(B_l) = C_l for nested B_1 >= ... >= B_L and C_1 >= ... >= C_L.
/// Rings X \ B_1, B_l \ B_{l+1}, B_L are matched to the corresponding C rings
/// left to right in circle order.
inline Rearrangement rearrangement_map(std::span<const ArcSet> sources, std::span<const ArcSet> targets) {
    if (sources.size() != targets.size())
        throw Error(ErrorKind::invalid_argument, "rearrangement needs as many targets as sources");
    const std::size_t L = sources.size();
    for (std::size_t l = 0; l < L; ++l) {
        if (sources[l].measure() != targets[l].measure())
            throw Error(ErrorKind::invalid_argument, "level " + std::to_string(l + 1) + ": measure(B) = " +
                                                         to_string(sources[l].measure()) + " but measure(C) = " +
                                                         to_string(targets[l].measure()));
        if (l > 0 && !subset(sources[l], sources[l - 1]))
            throw Error(ErrorKind::invalid_argument, "level " + std::to_string(l + 1) + ": sources are not nested");
        if (l > 0 && !subset(targets[l], targets[l - 1]))
            throw Error(ErrorKind::invalid_argument, "level " + std::to_string(l + 1) + ": targets are not nested");
    }
    auto ring = [L](std::span<const ArcSet> s, std::size_t l) {
        if (L == 0) return ArcSet::full();
        if (l == 0) return complement(s[0]);
        if (l == L) return s[L - 1];
        return difference(s[l - 1], s[l]);
    };
    std::vector<TranslationPiece> pieces;
    for (std::size_t l = 0; l <= L; ++l) {
        ArcSet from = ring(sources, l), to = ring(targets, l);
        const auto& fs = from.segments();
        const auto& ts = to.segments();
        std::size_t i = 0, k = 0;
        Rational fpos = fs.empty() ? Rational(0) : fs[0].lo;
        Rational tpos = ts.empty() ? Rational(0) : ts[0].lo;
        while (i < fs.size() && k < ts.size()) {
            Rational len = std::min(fs[i].hi - fpos, ts[k].hi - tpos);
            pieces.push_back({fpos, fpos + len, tpos - fpos});
            fpos += len;
            tpos += len;
            if (fpos == fs[i].hi && ++i < fs.size()) fpos = fs[i].lo;
            if (tpos == ts[k].hi && ++k < ts.size()) tpos = ts[k].lo;
        }
    }
    std::sort(pieces.begin(), pieces.end(), [](const TranslationPiece& a, const TranslationPiece& b) { return a.lo < b.lo; });
    std::vector<TranslationPiece> merged;
    for (auto& p : pieces) {
        if (!merged.empty() && merged.back().hi == p.lo && merged.back().offset == p.offset) merged.back().hi = std::move(p.hi);
        else merged.push_back(std::move(p));
    }
    return Rearrangement(PiecewiseTranslation(std::move(merged)));
}

struct ConjugatedHits {
    HitRecord direct;       // orbit of omega = sigma tau sigma^-1 from x against C_n
    HitRecord transported;  // orbit of tau from sigma^-1 x against sigma^-1(C_n)
};

/// Hits of omega = sigma o tau o sigma^-1 against targets[n-1], computed both ways;
/// throws a certificate error if the two routes disagree.
inline ConjugatedHits conjugated_hits_both(const MapSpec& map, const Rearrangement& sigma, const CirclePoint& x,
                                           std::span<const ArcSet> targets, std::uint64_t horizon) {
    if (!map.invertible()) throw Error(ErrorKind::unsupported, "conjugation needs an invertible map");
    if (horizon > targets.size())
        throw Error(ErrorKind::horizon, "target table has " + std::to_string(targets.size()) + " entries, horizon " +
                                            std::to_string(horizon) + " requested");
    ConjugatedHits out;
    out.direct.horizon = out.transported.horizon = horizon;
    CirclePoint w = x;
    const CirclePoint y0 = sigma.apply_inverse(x);
    CirclePoint y = y0;
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        w = sigma.apply(apply(map, sigma.apply_inverse(w)));
        y = apply(map, y);
        if (targets[n - 1].contains(w)) out.direct.times.push_back(n);
        if (sigma.preimage(targets[n - 1]).contains(y)) out.transported.times.push_back(n);
    }
    if (out.direct != out.transported)
        throw Error(ErrorKind::certificate, "conjugated hit routes disagree");
    return out;
}

inline HitRecord conjugated_hits(const MapSpec& map, const Rearrangement& sigma, const CirclePoint& x,
                                 std::span<const ArcSet> targets, std::uint64_t horizon) {
    return conjugated_hits_both(map, sigma, x, targets, horizon).direct;
}

/// Nested intervals [0, m(B_M)) matching an invisible target's measures row by row.
inline std::vector<ArcSet> interval_targets(std::span<const Rational> measures) {
    std::vector<ArcSet> out;
    out.reserve(measures.size());
    for (const auto& m : measures) out.push_back(ArcSet::interval(Rational(0), m));
    return out;
}

}  // namespace shrink
