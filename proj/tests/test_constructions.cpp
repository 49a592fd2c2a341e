#include <gtest/gtest.h>

#include "support.hpp"

using namespace shrink;
using testing_support::Gen;

namespace {

Rational q(long long a, long long b = 1) { return Rational(a, b); }
CirclePoint pt(long long a, long long b = 1) { return CirclePoint(q(a, b)); }

RateSeq shifted_half(std::size_t n) {
    std::vector<Rational> v;
    for (std::size_t k = 1; k <= n; ++k) v.push_back(q(1, 2 * static_cast<long long>(k) + 2));
    return RateSeq::table(v);
}

ArcSet levels(unsigned k, std::uint64_t from, std::uint64_t to) {
    std::vector<Segment> segs;
    for (std::uint64_t i = from; i < to; ++i) segs.push_back(odometer_level_segment(k, i));
    return normalize_segments(segs);
}

}  // namespace

TEST(AlmostInvariant, LevelShiftExample) {
    AlmostInvariantCert c = almost_invariant_set(4, q(1, 2), q(1, 4));
    EXPECT_EQ(c.K, 5u);
    EXPECT_EQ(c.A, levels(5, 0, 16));
    EXPECT_EQ(c.intersection, levels(5, 4, 16));
    EXPECT_EQ(c.intersection_measure, q(3, 8));
    EXPECT_TRUE(c.passed());
    EXPECT_TRUE(check_almost_invariant(c).ok);

    AlmostInvariantCert d = almost_invariant_set(1, q(1, 2), q(1, 2));
    EXPECT_EQ(d.K, 2u);
    EXPECT_GE(d.intersection_measure, q(1, 4));

    AlmostInvariantCert e = almost_invariant_set(3, q(1, 8), q(1));
    EXPECT_TRUE(e.passed());
    EXPECT_GE(e.intersection_measure, 0);
}

TEST(AlmostInvariant, Errors) {
    EXPECT_THROW(almost_invariant_set(0, q(1, 2), q(1, 2)), Error);
    EXPECT_THROW(almost_invariant_set(2, q(1, 3), q(1, 2)), Error);
    EXPECT_THROW(almost_invariant_set(2, q(1), q(1, 2)), Error);
    EXPECT_THROW(almost_invariant_set(2, q(1, 2), q(0)), Error);
}

TEST(AlmostInvariant, RandomParametersCertifyExactly) {
    Gen g(61);
    for (int i = 0; i < 100; ++i) {
        std::uint64_t n = g.range(1, 40);
        long dd = static_cast<long>(g.range(1, 6));
        Rational delta(static_cast<long long>(g.range(1, (1u << dd) - 1)), 1LL << dd);
        Rational eps(static_cast<long long>(g.range(1, 20)), 20);
        AlmostInvariantCert c = almost_invariant_set(n, delta, eps);
        EXPECT_EQ(c.A.measure(), delta);
        EXPECT_EQ(c.intersection_measure, delta - Rational(static_cast<long long>(n)) * pow2(-static_cast<long>(c.K)));
        EXPECT_GE(c.intersection_measure, (1 - eps) * delta);
        EXPECT_LE(Rational(static_cast<long long>(n)) * pow2(-static_cast<long>(c.K)), eps * delta);
        if (c.K > 1 && (delta * pow2(static_cast<long>(c.K) - 1)).den() == 1) {
            EXPECT_GT(Rational(static_cast<long long>(n)) * pow2(1 - static_cast<long>(c.K)), eps * delta);
        }
        EXPECT_TRUE(check_almost_invariant(c).ok);
    }
}

TEST(Sweep, ShiftedHalfRates) {
    RateSeq r = shifted_half(16);
    SweepCert c = slow_sweep_complement(r, 16);
    ASSERT_EQ(c.rows.size(), 16u);
    EXPECT_TRUE(c.passed());
    EXPECT_GT(c.E.measure(), 0);
    EXPECT_TRUE(check_sweep(c, &r).ok);
}

TEST(Sweep, DyadicTable) {
    RateSeq r = RateSeq::table({q(1, 8), q(1, 16), q(1, 32), q(1, 64)});
    SweepCert c = slow_sweep_complement(r, 4);
    EXPECT_EQ(c.rows[0].bound, q(7, 8));
    EXPECT_LE(c.rows[0].measure, q(7, 8));
    EXPECT_TRUE(c.passed());
    EXPECT_TRUE(check_sweep(c, &r).ok);
}

TEST(Sweep, ScheduleShape) {
    RateSeq r = shifted_half(512);
    auto s = sweep_schedule(r, 512);
    ASSERT_GE(s.size(), 2u);
    EXPECT_EQ(s[0].start, 1u);
    Rational total(0);
    for (std::size_t j = 1; j < s.size(); ++j) {
        EXPECT_LE(2 * r.at(s[j].start), s[j].gamma);
        EXPECT_GT(s[j].start, s[j - 1].start);
        EXPECT_EQ(s[j - 1].next, s[j].start);
        total += s[j].gamma;
    }
    EXPECT_LT(total, 1 - 2 * r.at(1));
}

TEST(Sweep, InfeasibleFirstRate) {
    EXPECT_THROW(slow_sweep_complement(RateSeq::table({q(1, 2), q(1, 4)}), 2), Error);
}

TEST(Sweep, TamperedRowIsRejected) {
    RateSeq r = shifted_half(16);
    SweepCert c = slow_sweep_complement(r, 16);
    c.rows[5].measure = c.rows[5].measure - q(1, 1024);
    CheckReport rep = check_sweep(c, &r);
    EXPECT_FALSE(rep.ok);
    EXPECT_NE(rep.failure.find("row M=6"), std::string::npos);
}

TEST(Invisible, ShiftedHalfRates) {
    RateSeq r = shifted_half(16);
    InvisibleTargetCert c = invisible_target(r, 16);
    ASSERT_EQ(c.rows.size(), 16u);
    EXPECT_TRUE(c.passed());
    EXPECT_TRUE(c.nested());
    EXPECT_GE(c.rows.back().measure_B, q(1, 34));
    EXPECT_EQ(c.rows.back().measure_B, q(17, 512));
    Rational prev_e(0);
    for (const auto& row : c.rows) {
        EXPECT_GE(row.measure_E, prev_e);
        prev_e = row.measure_E;
    }
    EXPECT_TRUE(check_invisible_target(c, &r).ok);
}

TEST(Invisible, DisjointnessAgainstDirectImages) {
    RateSeq r = shifted_half(40);
    InvisibleTargetCert c = invisible_target(r, 40);
    const MapSpec odo = MapSpec::odometer();
    for (const auto& ep : c.epochs) {
        for (std::uint64_t m = ep.first; m <= ep.last; ++m) {
            const ArcSet& b = c.stored_B.at(m);
            ArcSet img = ep.E;
            for (std::uint64_t k = 1; k <= m; ++k) {
                img = image_set(odo, img);
                EXPECT_TRUE(disjoint(img, b)) << "M=" << m << " k=" << k;
            }
        }
    }
}

TEST(Invisible, ConstantQuarter) {
    RateSeq r = RateSeq::table(std::vector<Rational>(4, q(1, 4)));
    InvisibleTargetCert c = invisible_target(r, 4);
    for (const auto& row : c.rows) EXPECT_GE(row.measure_B, q(1, 4));
    EXPECT_TRUE(c.passed());
    EXPECT_TRUE(check_invisible_target(c, &r).ok);
}

TEST(Invisible, TamperedStoredSetIsRejected) {
    RateSeq r = shifted_half(16);
    InvisibleTargetCert c = invisible_target(r, 16);
    c.stored_B[3] = unite(c.stored_B[3], ArcSet::interval(q(0), q(1, 1024)));
    EXPECT_FALSE(check_invisible_target(c, &r).ok);
}

TEST(Visible, GreedyQuarterBlock) {
    RateSeq r = RateSeq::table(std::vector<Rational>(64, q(1, 4)));
    VisibleTargetCert c = visible_target_dyadic(r, 1);
    ASSERT_EQ(c.blocks.size(), 1u);
    const VisibleBlock& b = c.blocks[0];
    std::vector<std::uint64_t> idx;
    for (const auto& v : b.indices) idx.push_back(v.n);
    EXPECT_EQ(idx, (std::vector<std::uint64_t>{1, 3, 5, 7}));
    EXPECT_TRUE(b.windows_disjoint);
    EXPECT_EQ(b.sum, 1);
    EXPECT_EQ(b.product, q(81, 256));
    ASSERT_TRUE(b.direct_miss.has_value());
    EXPECT_EQ(*b.direct_miss, q(81, 256));
    EXPECT_TRUE(c.passed());
    EXPECT_TRUE(check_visible_target(c, &r).ok);
}

TEST(Visible, FullTargets) {
    RateSeq r = RateSeq::table(std::vector<Rational>(16, q(1)));
    VisibleTargetCert c = visible_target_dyadic(r, 3);
    EXPECT_TRUE(c.passed());
    for (const auto& b : c.blocks)
        for (const auto& v : b.indices) EXPECT_EQ(v.m, 0u);
    auto tg = TargetSeq::sets(c.target_table(c.scanned));
    EXPECT_EQ(hits(MapSpec::doubling(), pt(1, 3), tg, c.scanned).count(), c.scanned);
}

TEST(Visible, SeveralBlocksCrossCheckedByPreimages) {
    RateSeq r = RateSeq::table(std::vector<Rational>(200, q(1, 4)));
    VisibleTargetCert c = visible_target_dyadic(r, 3);
    EXPECT_TRUE(c.passed());
    EXPECT_TRUE(c.nested);
    EXPECT_TRUE(c.bracket);
    auto table = c.target_table(c.scanned);
    int expanded = 0;
    for (const auto& b : c.blocks) {
        EXPECT_GE(b.sum, Rational(static_cast<long long>(b.j)));
        EXPECT_LE(b.product, b.exp_lower);
        const std::uint64_t base = b.indices.front().n;
        if (b.indices.back().n + b.indices.back().m - base > 16) continue;
        // shifting every index by base preserves the measure of the union
        std::vector<std::pair<std::uint64_t, ArcSet>> indexed;
        for (const auto& v : b.indices) indexed.emplace_back(v.n - base, table[v.n - 1]);
        EXPECT_EQ(1 - preimage_union(MapSpec::doubling(), indexed).measure, b.product) << "block " << b.j;
        ++expanded;
    }
    EXPECT_GE(expanded, 2);
    EXPECT_TRUE(check_visible_target(c, &r).ok);
}

TEST(Visible, HarmonicRatesCannotReachSecondBlock) {
    // disjoint windows gather about 1/(2m) mass per dyadic range (2^(m-1), 2^m]
    VisibleTargetCert one = visible_target_dyadic(RateSeq::c_over_n(q(1)), 1);
    EXPECT_TRUE(one.passed());
    try {
        visible_target_dyadic(RateSeq::c_over_n(q(1)), 3, 1u << 16);
        FAIL() << "expected the block-sum diagnostic";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::infeasible);
        EXPECT_NE(std::string(e.what()).find("cannot reach block sum"), std::string::npos);
    }
    EXPECT_THROW(visible_target_dyadic(RateSeq::c_over_n_pow(q(1), q(2)), 1), Error);
}

TEST(Visible, ExpBounds) {
    for (unsigned j = 1; j <= 6; ++j) {
        auto [lo, hi] = exp_neg_bounds(j);
        EXPECT_LT(lo, hi);
        EXPECT_LT(lo.to_double(), std::exp(-static_cast<double>(j)) * (1 + 1e-12));
        EXPECT_GT(hi.to_double(), std::exp(-static_cast<double>(j)) * (1 - 1e-12));
        EXPECT_LT((hi - lo).to_double(), 1e-20);
    }
}

TEST(Visible, TamperedProductIsRejected) {
    RateSeq r = RateSeq::table(std::vector<Rational>(64, q(1, 4)));
    VisibleTargetCert c = visible_target_dyadic(r, 2);
    c.blocks[1].product = c.blocks[1].product / 2;
    CheckReport rep = check_visible_target(c, &r);
    EXPECT_FALSE(rep.ok);
    EXPECT_NE(rep.failure.find("block j=2"), std::string::npos);
}

TEST(SmallSweep, Examples) {
    const MapSpec odo = MapSpec::odometer();
    SmallSweepCert c = generic_small_sweep({ArcSet::interval(q(0), q(1, 8))}, odo, q(1, 8));
    EXPECT_EQ(c.E, complement(ArcSet::interval(q(1, 2), q(5, 8))));
    EXPECT_EQ(c.measure_E, q(7, 8));
    EXPECT_TRUE(c.passed());
    EXPECT_TRUE(check_small_sweep(c, odo).ok);

    SmallSweepCert e = generic_small_sweep({}, odo, q(1, 8));
    EXPECT_TRUE(e.E.is_full());

    std::vector<ArcSet> seeds;
    for (long long n = 1; n <= 3; ++n) seeds.push_back(ArcSet::interval(q(0), pow2(-2 * n) / Rational(n)));
    EXPECT_EQ(seed_budget(seeds), q(21, 64));
    EXPECT_THROW(generic_small_sweep(seeds, odo, q(1, 4)), Error);
    SmallSweepCert s = generic_small_sweep(seeds, odo, q(21, 64));
    EXPECT_GE(s.measure_E, 1 - q(21, 64));
    EXPECT_TRUE(s.passed());
    EXPECT_TRUE(check_small_sweep(s, odo).ok);
    EXPECT_THROW(generic_small_sweep(seeds, MapSpec::doubling(), q(1, 2)), Error);
}

TEST(SmallSweep, RandomSeedsOnInvertibleMaps) {
    Gen g(62);
    for (const MapSpec& m : testing_support::sample_maps()) {
        if (!m.invertible()) continue;
        for (int i = 0; i < 10; ++i) {
            std::vector<ArcSet> seeds;
            for (long long n = 1; n <= 4; ++n) seeds.push_back(ArcSet::from_arc(Arc(g.unit(64), q(1, 16 * n * n))));
            Rational eps = seed_budget(seeds);
            SmallSweepCert c = generic_small_sweep(seeds, m, eps);
            EXPECT_TRUE(c.passed()) << m.name();
            EXPECT_TRUE(check_small_sweep(c, m).ok) << m.name();
        }
    }
}

TEST(Rearrangement, Examples) {
    std::vector<ArcSet> b1{ArcSet::interval(q(1, 4), q(1, 2))}, c1{ArcSet::interval(q(0), q(1, 4))};
    Rearrangement s1 = rearrangement_map(b1, c1);
    EXPECT_EQ(s1.image(b1[0]), c1[0]);
    EXPECT_EQ(s1.apply(pt(3, 8)), pt(1, 8));

    ArcSet ring = unite(ArcSet::interval(q(0), q(1, 4)), ArcSet::interval(q(1, 2), q(3, 4)));
    std::vector<ArcSet> b2{ring}, c2{ArcSet::interval(q(0), q(1, 2))};
    Rearrangement s2 = rearrangement_map(b2, c2);
    EXPECT_EQ(s2.image(ring), c2[0]);
    int on_ring = 0;
    for (const auto& p : s2.pieces())
        if (subset(ArcSet::interval(p.lo, p.hi), ring)) ++on_ring;
    EXPECT_EQ(on_ring, 2);

    std::vector<ArcSet> same{ArcSet::interval(q(0), q(1, 2)), ArcSet::interval(q(0), q(1, 4))};
    Rearrangement id = rearrangement_map(same, same);
    for (const auto& s : same) EXPECT_EQ(id.image(s), s);

    std::vector<ArcSet> bad{ArcSet::interval(q(0), q(1, 3))};
    try {
        rearrangement_map(bad, c1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("level 1"), std::string::npos);
    }
}

TEST(Rearrangement, RandomNestedFamilies) {
    Gen g(63);
    for (int i = 0; i < 40; ++i) {
        std::vector<ArcSet> src, tgt;
        ArcSet cur = ArcSet::full();
        for (int l = 0; l < 4; ++l) {
            cur = intersect(cur, g.grid_set(64, 4));
            src.push_back(cur);
            tgt.push_back(ArcSet::interval(q(0), cur.measure()));
        }
        Rearrangement s = rearrangement_map(src, tgt);
        Rational total(0);
        for (const auto& p : s.pieces()) total += p.hi - p.lo;
        EXPECT_EQ(total, 1);
        for (std::size_t l = 0; l < src.size(); ++l) {
            EXPECT_EQ(s.image(src[l]), tgt[l]);
            EXPECT_EQ(s.preimage(tgt[l]), src[l]);
        }
        for (int t = 0; t < 10; ++t) {
            CirclePoint x(g.unit(300));
            EXPECT_EQ(s.apply_inverse(s.apply(x)), x);
        }
    }
}

TEST(ConjugatedHits, IdentityAndTranslation) {
    const MapSpec odo = MapSpec::odometer();
    std::vector<ArcSet> targets;
    for (long long n = 1; n <= 20; ++n) targets.push_back(ArcSet::interval(q(0), q(1, n + 1)));
    HitRecord direct = hits(odo, pt(3, 7), TargetSeq::sets(targets), 20);
    EXPECT_EQ(conjugated_hits(odo, Rearrangement::identity(), pt(3, 7), targets, 20), direct);

    MapSpec rot = MapSpec::rotation(RotationAngle({3, 2}));
    Rearrangement shift{PiecewiseTranslation({{q(0), q(3, 4), q(1, 4)}, {q(3, 4), q(1), q(-3, 4)}})};
    HitRecord a = conjugated_hits(rot, shift, pt(1, 9), targets, 20);
    EXPECT_EQ(a, hits(rot, pt(1, 9), TargetSeq::sets(targets), 20));
}

TEST(ConjugatedHits, TransportIdentityOnRandomInstances) {
    Gen g(64);
    for (const MapSpec& m : testing_support::sample_maps()) {
        if (!m.invertible()) continue;
        for (int i = 0; i < 10; ++i) {
            std::vector<ArcSet> src, tgt, b;
            ArcSet cur = ArcSet::full();
            for (int l = 0; l < 3; ++l) {
                cur = intersect(cur, g.grid_set(32, 3));
                src.push_back(cur);
                tgt.push_back(ArcSet::interval(q(0), cur.measure()));
            }
            Rearrangement s = rearrangement_map(src, tgt);
            for (int n = 0; n < 15; ++n) b.push_back(g.grid_set(32, 2));
            std::vector<ArcSet> sb;
            for (const auto& x : b) sb.push_back(s.image(x));
            CirclePoint x(g.unit(200));
            EXPECT_EQ(conjugated_hits(m, s, s.apply(x), sb, 15), hits(m, x, TargetSeq::sets(b), 15));
        }
    }
}

TEST(ConjugatedHits, InvisibleTargetTransport) {
    RateSeq r = shifted_half(16);
    InvisibleTargetCert c = invisible_target(r, 16);
    std::vector<ArcSet> src;
    std::vector<Rational> meas;
    for (std::uint64_t m = 1; m <= 16; ++m) {
        src.push_back(c.stored_B.at(m));
        meas.push_back(c.stored_B.at(m).measure());
    }
    std::vector<ArcSet> tgt = interval_targets(meas);
    for (std::uint64_t m = 1; m <= 16; ++m) EXPECT_TRUE(subset(ArcSet::interval(q(0), r.at(m)), tgt[m - 1]));
    Rearrangement s = rearrangement_map(src, tgt);
    const MapSpec odo = MapSpec::odometer();
    ArcSet e1 = s.image(c.epochs.front().E);
    Gen g(65);
    int tested = 0;
    for (int i = 0; i < 400 && tested < 40; ++i) {
        CirclePoint x(g.unit(4096));
        if (!e1.contains(x)) continue;
        ++tested;
        EXPECT_EQ(conjugated_hits(odo, s, x, tgt, 16).count(), 0u);
    }
    EXPECT_GT(tested, 0);
}
