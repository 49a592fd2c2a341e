// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "support.hpp"

#include "shrink/io.hpp"

using namespace shrink;
using testing_support::Gen;

namespace {

Rational q(long long a, long long b = 1) { return Rational(a, b); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string dec(const Rational& r, int places = 6) { return to_decimal(r, places); }

RateSeq shifted_half(std::uint64_t n) {
    std::vector<Rational> v;
    v.reserve(n);
    for (std::uint64_t k = 1; k <= n; ++k) v.push_back(Rational(1) / Rational(Integer(static_cast<unsigned long>(2 * k + 2))));
    return RateSeq::table(std::move(v));
}

// 1. r_n >= 1/(2n) along mixed orbits, with equality for equally spaced points.
Outcome covering_lower_bound() {
    Gen g(1001);
    std::vector<MapSpec> maps = testing_support::sample_maps();
    maps.push_back(MapSpec::rotation(golden_rotation(1000)));
    maps.push_back(MapSpec::rotation(RotationAngle({1, 10, 100, 1000})));
    std::uint64_t checked = 0, violations = 0;
    for (int i = 0; i < 50; ++i) {
        const MapSpec& m = maps[static_cast<std::size_t>(i) % maps.size()];
        CirclePoint x = g.coin() ? g.wide_point() : CirclePoint(g.unit(100000));
        CoverProfile p = covering_profile(m, x, 1000);
        for (std::uint64_t n = 1; n <= p.horizon(); ++n, ++checked)
            if (p.values[n - 1] < Rational(1) / Rational(Integer(static_cast<unsigned long>(2 * n)))) ++violations;
    }
    std::uint64_t equal = 0;
    for (long long n = 1; n <= 200; ++n) {
        std::vector<CirclePoint> pts;
        for (long long k = 0; k < n; ++k) pts.emplace_back(q(k, n));
        if (covering_radius(pts) == q(1, 2 * n)) ++equal;
    }
    return {violations == 0 && equal == 200,
            std::to_string(checked) + " profile values over 50 orbits, " + std::to_string(violations) +
                " below 1/(2n); equally spaced n=1..200 hit 1/(2n) in " + std::to_string(equal) + " cases"};
}

// 2. Bounded quotients give n r_n <= 2; huge quotients break any such constant.
Outcome bounded_quotient_rate() {
    const std::uint64_t N = 10000;
    RotationAngle golden = golden_rotation(N);
    Rational qn(golden.denominator());
    bool horizon_ok = golden.depth() >= 25 && qn >= Rational(Integer(static_cast<unsigned long>(N * N)));
    RateReport g = rate_report(covering_profile(MapSpec::rotation(golden), CirclePoint(q(0)), N), 100);
    RotationAngle liouville({1, 10, 100, 1000, 10000, 100000, 1000000, 10000000});
    RateReport l = rate_report(covering_profile(MapSpec::rotation(liouville), CirclePoint(q(0)), 100000), 1);
    return {horizon_ok && g.sup_scaled <= 2 && l.sup_scaled > 10,
            "golden depth " + std::to_string(golden.depth()) + ", sup n r_n over [100, 1e4] = " + dec(g.sup_scaled) +
                " at n=" + std::to_string(g.argmax) + " (<= 2); Liouville sup over n <= 1e5 = " + dec(l.sup_scaled) +
                " at n=" + std::to_string(l.argmax) + " (> 10)"};
}

// 3. min_n n d(tau^n x, x) <= 1 for golden rotation; x = 0 gives <= 0.45.
Outcome boshernitzan() {
    const std::uint64_t N = 10000;
    MapSpec m = MapSpec::rotation(golden_rotation(N));
    Gen g(1003);
    Rational worst(0);
    for (int i = 0; i < 20; ++i) {
        CirclePoint x = g.wide_point();
        Rational v = scaled_distance_min(m, x, x, N).value;
        if (v > worst) worst = v;
    }
    ScaledDistance zero = scaled_distance_min(m, CirclePoint(q(0)), CirclePoint(q(0)), N);
    return {worst <= 1 && zero.value <= q(45, 100),
            "largest min over 20 points = " + dec(worst) + " (<= 1); x=0 min = " + dec(zero.value) + " at n=" +
                std::to_string(zero.argmin) + " (<= 0.45)"};
}

// 4. Almost-invariant sets on the odometer.
Outcome almost_invariant() {
    AlmostInvariantCert c = almost_invariant_set(4, q(1, 2), q(1, 4));
    bool example = c.intersection_measure == q(3, 8) && check_almost_invariant(c).ok;
    Gen g(1004);
    int certified = 0;
    for (int i = 0; i < 100; ++i) {
        std::uint64_t n = g.range(1, 64);
        long d = static_cast<long>(g.range(1, 6));
        Rational delta = Rational(static_cast<long long>(g.range(1, (1ULL << d) - 1))) * pow2(-d);
        Rational eps(static_cast<long long>(g.range(1, 20)), 20);
        AlmostInvariantCert a = almost_invariant_set(n, delta, eps);
        Rational exact = delta - Rational(static_cast<long long>(n)) * pow2(-static_cast<long>(a.K));
        if (a.passed() && a.intersection_measure == exact && check_almost_invariant(a).ok) ++certified;
    }
    return {example && certified == 100,
            "n=4, delta=1/2, eps=1/4: K=" + std::to_string(c.K) + ", measure " + to_string(c.intersection_measure) +
                "; random cases certified exactly: " + std::to_string(certified) + "/100"};
}

// 5. Slow sweep and invisible target at horizon 2^12, re-verified from JSON.
Outcome sweep_and_invisible() {
    const std::uint64_t N = 4096;
    RateSeq r = shifted_half(N);
    SweepCert s = slow_sweep_complement(r, N);
    InvisibleTargetCert inv = invisible_target(r, N);
    std::size_t disjoint = 0;
    for (const auto& row : inv.rows) disjoint += row.disjoint;
    io::json sj = io::json::parse(io::to_json(s, r).dump());
    io::json ij = io::json::parse(io::to_json(inv, r).dump());
    CheckReport sv = io::verify(sj), iv = io::verify(ij);
    bool ok = s.passed() && s.E.measure() > 0 && inv.passed() && disjoint == N && sv.ok && iv.ok;
    std::string detail = "sweep rows passed " + std::string(s.passed() ? "all" : "not all") + ", m(E) = " +
                         dec(s.E.measure()) + "; invisible rows disjoint " + std::to_string(disjoint) + "/" +
                         std::to_string(N) + ", m(B_N) = " + to_string(inv.rows.back().measure_B) +
                         "; JSON re-verification sweep " + (sv.ok ? "OK" : sv.failure) + ", invisible " +
                         (iv.ok ? "OK" : iv.failure);
    return {ok, detail};
}

// 6. Visible target for eps_n = 1/n with J = 5 blocks.
Outcome visible_target() {
    const unsigned J = 5;
    RateSeq r = RateSeq::c_over_n(q(1));
    VisibleTargetCert c;
    try {
        c = visible_target_dyadic(r, J);
    } catch (const Error& e) {
        VisibleTargetCert one = visible_target_dyadic(r, 1);
        return {false, std::string(e.what()) + " (block 1 alone certifies: " + (one.passed() ? "yes" : "no") + ", sum " +
                           dec(one.blocks[0].sum) + ")"};
    }
    bool blocks_ok = c.passed() && check_visible_target(c, &r).ok;
    auto table = c.target_table(c.scanned);
    for (const auto& b : c.blocks) {
        const std::uint64_t base = b.indices.front().n, last = b.indices.back().n;
        if (last + b.indices.back().m - base > 16) continue;
        std::vector<ArcSet> shifted;
        for (std::uint64_t n = base; n <= last; ++n) {
            bool listed = std::any_of(b.indices.begin(), b.indices.end(), [n](const VisibleIndex& v) { return v.n == n; });
            shifted.push_back(listed ? table[n - 1] : ArcSet());
        }
        if (1 - tail_preimage_union(MapSpec::doubling(), shifted, 1, shifted.size()).measure != b.product) blocks_ok = false;
    }
    Gen g(1006);
    int all_blocks = 0;
    for (int i = 0; i < 256; ++i) {
        HitRecord h = hits(MapSpec::doubling(), g.wide_point(), TargetSeq::sets(table), c.scanned);
        bool every = true;
        for (const auto& b : c.blocks) {
            bool hit = false;
            for (const auto& v : b.indices) hit = hit || std::binary_search(h.times.begin(), h.times.end(), v.n);
            every = every && hit;
        }
        all_blocks += every;
    }
    return {blocks_ok && all_blocks >= 231, "blocks certified " + std::string(blocks_ok ? "yes" : "no") +
                                                ", points hitting every block " + std::to_string(all_blocks) + "/256"};
}

// 7. Summable targets on the doubling map are hit finitely often. The cutoff is the
// least multiple of 1000 with 200 * sum_{cutoff < n <= N} m(B_n) <= 1/100.
Outcome borel_cantelli() {
    const std::uint64_t N = 10000, cutoff = 6000;
    const int samples = 200;
    RateSeq r = RateSeq::dyadic_floor(RateSeq::c_over_n_pow(q(1), q(2)));
    std::vector<ArcSet> table;
    table.reserve(N);
    for (std::uint64_t n = 1; n <= N; ++n) table.push_back(ArcSet::interval(q(0), r.at(n)));
    TargetSeq targets = TargetSeq::sets(table, true);
    const double expected = expected_hits(r, N).to_double();
    Gen g(1007);
    double sum = 0, sum2 = 0;
    std::uint64_t last = 0;
    for (int i = 0; i < samples; ++i) {
        HitRecord h = hits(MapSpec::doubling(), g.wide_point(), targets, N);
        double k = static_cast<double>(h.count());
        sum += k;
        sum2 += k * k;
        if (!h.times.empty()) last = std::max(last, h.times.back());
    }
    const double mean = sum / samples;
    const double sd = std::sqrt((sum2 - samples * mean * mean) / (samples - 1));
    const double se = sd / std::sqrt(static_cast<double>(samples));
    char buf[256];
    std::snprintf(buf, sizeof buf, "mean hits %.4f vs exact sum %.5f, |diff| = %.4f <= 3 se = %.4f; last hit %llu <= %llu",
                  mean, expected, std::fabs(mean - expected), 3 * se, static_cast<unsigned long long>(last),
                  static_cast<unsigned long long>(cutoff));
    return {std::fabs(mean - expected) <= 3 * se && last <= cutoff, buf};
}

// 8. Shepp ordering and classification.
Outcome shepp_ordering() {
    const std::uint64_t N = 10000, trials = 400, seed = 42;
    CoverageEstimate hi = coverage_probability(seed, LengthFamily::c_over_n(q(2)), N, trials);
    CoverageEstimate lo = coverage_probability(seed, LengthFamily::c_over_n(q(1, 2)), N, trials);
    bool ordered = hi.estimate > lo.estimate && hi.wilson_low > lo.wilson_high;
    bool cls = classify_lengths(LengthFamily::c_over_n(q(1))) == Classification::diverges &&
               classify_lengths(LengthFamily::c_over_n(q(1, 2))) == Classification::converges &&
               classify_lengths(LengthFamily::log_n_over_n()) == Classification::diverges;
    char buf[256];
    std::snprintf(buf, sizeof buf, "c=2: %llu/%llu [%.4f, %.4f]%s; c=1/2: %llu/%llu [%.4f, %.4f]; classes %s",
                  static_cast<unsigned long long>(hi.covered), static_cast<unsigned long long>(trials), hi.wilson_low,
                  hi.wilson_high, hi.certain ? " (certain)" : "", static_cast<unsigned long long>(lo.covered),
                  static_cast<unsigned long long>(trials), lo.wilson_low, lo.wilson_high,
                  cls ? "diverges/converges/diverges" : "wrong");
    return {ordered && cls, buf};
}

// 9. Conjugating the odometer by sigma with sigma(B_n) = [0, m(B_n)) keeps sigma(E_1) invisible.
Outcome transport_identity() {
    const std::uint64_t N = 256;
    RateSeq r = shifted_half(N);
    InvisibleTargetCert c = invisible_target(r, N, N);
    std::vector<ArcSet> src;
    std::vector<Rational> meas;
    for (std::uint64_t m = 1; m <= N; ++m) {
        src.push_back(c.stored_B.at(m));
        meas.push_back(src.back().measure());
    }
    std::vector<ArcSet> tgt = interval_targets(meas);
    bool contain_eps = true;
    for (std::uint64_t m = 1; m <= N; ++m) contain_eps = contain_eps && subset(ArcSet::interval(q(0), r.at(m)), tgt[m - 1]);
    Rearrangement sigma = rearrangement_map(src, tgt);
    bool exact = true;
    for (std::uint64_t m = 0; m < N; ++m) exact = exact && sigma.image(src[m]) == tgt[m];
    const MapSpec odo = MapSpec::odometer();
    const ArcSet start = sigma.image(c.epochs.front().E);
    ArcSet cur = start;
    std::uint64_t hit_steps = 0;
    for (std::uint64_t n = 1; n <= N; ++n) {
        cur = sigma.image(image_set(odo, sigma.preimage(cur)));
        if (!disjoint(cur, tgt[n - 1])) ++hit_steps;
    }
    Gen g(1009);
    int sampled = 0, sample_hits = 0;
    for (int i = 0; i < 4000 && sampled < 64; ++i) {
        CirclePoint x(g.on_grid(1ULL << 40));
        if (!start.contains(x)) continue;
        ++sampled;
        sample_hits += conjugated_hits_both(odo, sigma, x, tgt, N).direct.count() > 0;
    }
    return {contain_eps && exact && hit_steps == 0 && sample_hits == 0 && sampled > 0 && start.measure() > 0,
            "sigma(B_n) = [0, m(B_n)) exactly for n <= 256: " + std::string(exact ? "yes" : "no") + "; m(sigma E_1) = " +
                dec(start.measure()) + "; steps with omega^n(sigma E_1) meeting C_n: " + std::to_string(hit_steps) +
                "; sampled points with hits (both routes): " + std::to_string(sample_hits) + "/" + std::to_string(sampled)};
}

// 10. Randomized exact identities.
Outcome algebra_oracles() {
    Gen g(1010);
    const std::vector<MapSpec> maps = testing_support::sample_maps();
    const int total = 10000;
    int failures = 0;
    for (int i = 0; i < total; ++i) {
        bool ok = true;
        switch (i % 6) {
        case 0: {
            ArcSet a = g.general_set(6), b = g.general_set(6);
            ok = unite(a, b).measure() + intersect(a, b).measure() == a.measure() + b.measure();
            break;
        }
        case 1: {
            ArcSet a = g.general_set(6), b = g.general_set(6);
            ok = complement(unite(a, b)) == intersect(complement(a), complement(b)) &&
                 complement(intersect(a, b)) == unite(complement(a), complement(b));
            break;
        }
        case 2: {
            std::vector<CirclePoint> pts;
            for (std::uint64_t k = 0, n = g.range(1, 40); k < n; ++k) pts.emplace_back(g.unit(1000));
            Rational s(0);
            for (const auto& gap : circular_gaps(pts)) s += gap;
            ok = s == 1;
            break;
        }
        case 3: {
            const MapSpec& m = maps[g.below(maps.size())];
            ArcSet a = g.general_set(5, 200);
            ok = preimage_set(m, a).measure() == a.measure();
            break;
        }
        case 4: {
            const MapSpec& m = maps[g.below(maps.size())];
            CirclePoint x(g.unit(5000));
            std::uint64_t n = g.range(1, 60);
            ok = covering_profile(m, x, n).values.back() == covering_radius(orbit(m, x, n));
            break;
        }
        case 5: {
            std::vector<std::uint64_t> qs;
            for (std::uint64_t k = 0, d = g.range(2, 12); k < d; ++k) qs.push_back(g.range(1, 20));
            if (qs.back() == 1) qs.back() = 2;
            CoverProfile p = covering_profile(MapSpec::rotation(RotationAngle(qs)), CirclePoint(g.unit(1000)), 80);
            ok = *std::max_element(p.distinct_gaps.begin(), p.distinct_gaps.end()) <= 3;
            break;
        }
        }
        failures += !ok;
    }
    return {failures == 0, std::to_string(total) + " identities checked, " + std::to_string(failures) + " failed"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {1, "covering-radius lower bound", 10, covering_lower_bound},
        {2, "bounded-quotient covering rate", 60, bounded_quotient_rate},
        {3, "return statistic for golden rotation", 30, boshernitzan},
        {4, "almost-invariant set certificates", 10, almost_invariant},
        {5, "slow sweep and invisible target certificates", 120, sweep_and_invisible},
        {6, "visible target certificate, eps_n = 1/n, J = 5", 120, visible_target},
        {7, "summable targets hit finitely often", 60, borel_cantelli},
        {8, "random covering ordering", 120, shepp_ordering},
        {9, "transport identity", 30, transport_identity},
        {10, "exact algebra identities", 60, algebra_oracles},
    };
    int failed = 0;
    for (const auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool pass = o.pass && secs < c.limit;
        failed += !pass;
        std::printf("criterion %2d %s: %s | %s | %.1f s (limit %.0f s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str(), secs, c.limit);
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
