#pragma once

/**
 * @file io.hpp
 * @brief JSON forms of sets, maps, rate families and certificates, plus
 * `verify` for serialized certificates. Every rational is a "p/q" string.
 * Needs nlohmann/json (vendor/json.hpp).
 */

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "shrink/circle_maps.hpp"
#include "shrink/constructions.hpp"
#include "shrink/error.hpp"
#include "shrink/interval_algebra.hpp"
#include "shrink/random_covering.hpp"
#include "shrink/rational.hpp"
#include "shrink/target_engine.hpp"

namespace shrink::io {

using json = nlohmann::ordered_json;

[[noreturn]] inline void bad(const std::string& what) { throw Error(ErrorKind::config, what); }

inline const json& field(const json& j, const char* key) {
    if (!j.is_object()) bad(std::string("expected an object holding \"") + key + "\"");
    auto it = j.find(key);
    if (it == j.end()) bad(std::string("missing field \"") + key + "\"");
    return *it;
}

inline std::uint64_t get_u64(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        bad(std::string("field \"") + key + "\" must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline bool get_bool(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_boolean()) bad(std::string("field \"") + key + "\" must be true or false");
    return v.get<bool>();
}

// ---------------------------------------------------------------------------
// Scalars and sets

inline json to_json(const Rational& r) { return to_string(r); }

/// Accepts "p/q", "p", or a JSON integer.
inline Rational rational_from(const json& j) {
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (!j.is_string()) bad("expected a rational as a \"p/q\" string, got " + j.dump());
    try {
        return parse_rational(j.get<std::string>());
    } catch (const Error& e) {
        bad(std::string("bad rational: ") + e.what());
    }
}

inline Rational get_rational(const json& j, const char* key) { return rational_from(field(j, key)); }

inline json to_json(const ArcSet& s) {
    json out = json::array();
    for (const Arc& a : s.arcs()) out.push_back({{"start", to_json(a.start().value())}, {"length", to_json(a.length())}});
    return out;
}

inline ArcSet arcset_from(const json& j) {
    if (!j.is_array()) bad("an arc set is a JSON array of {start, length}");
    std::vector<Arc> arcs;
    arcs.reserve(j.size());
    for (const auto& e : j) {
        Rational start = get_rational(e, "start");
        Rational length = get_rational(e, "length");
        if (start < 0 || start >= 1) bad("arc start " + to_string(start) + " outside [0,1)");
        try {
            arcs.emplace_back(start, length);
        } catch (const Error& err) {
            bad(err.what());
        }
    }
    return normalize(arcs);
}

inline json to_json(const std::vector<ArcSet>& sets) {
    json out = json::array();
    for (const auto& s : sets) out.push_back(to_json(s));
    return out;
}

inline std::vector<ArcSet> arcsets_from(const json& j) {
    if (!j.is_array()) bad("expected an array of arc sets");
    std::vector<ArcSet> out;
    out.reserve(j.size());
    for (const auto& e : j) out.push_back(arcset_from(e));
    return out;
}

inline std::vector<Rational> rationals_from(const json& j) {
    if (!j.is_array()) bad("expected an array of rationals");
    std::vector<Rational> out;
    out.reserve(j.size());
    for (const auto& e : j) out.push_back(rational_from(e));
    return out;
}

// ---------------------------------------------------------------------------
// Maps

/// Tagged form: {"rotation": {"quotients": [...]}}, {"doubling": {}}, {"odometer": {}},
/// {"iet": {"lengths": [...], "perm": [...]}}.
inline json to_json(const MapSpec& map) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Rotation>) return {{"rotation", {{"quotients", v.angle.quotients()}}}};
            else if constexpr (std::is_same_v<T, Doubling>) return {{"doubling", json::object()}};
            else if constexpr (std::is_same_v<T, Odometer>) return {{"odometer", json::object()}};
            else {
                json lengths = json::array();
                for (const auto& l : v.lengths) lengths.push_back(to_json(l));
                json perm = json::array();
                for (auto p : v.perm) perm.push_back(p);
                return {{"iet", {{"lengths", lengths}, {"perm", perm}}}};
            }
        },
        map.variant());
}

/// Rotations also accept {"golden": true} (needs `horizon`, q >= N^2, depth >= 25)
/// and {"angle": "p/q"}.
inline MapSpec map_from(const json& j, std::uint64_t horizon = 0) {
    if (!j.is_object() || j.size() != 1) bad("a map is an object with exactly one key: rotation, doubling, odometer or iet");
    const auto& [tag, body] = *j.items().begin();
    try {
        if (tag == "doubling") return MapSpec::doubling();
        if (tag == "odometer") return MapSpec::odometer();
        if (tag == "rotation") {
            if (body.contains("quotients")) {
                const json& q = body["quotients"];
                if (!q.is_array()) bad("rotation quotients must be an array");
                std::vector<std::uint64_t> qs;
                for (const auto& a : q) {
                    if (!a.is_number_integer() || a.get<long long>() < 1) bad("partial quotients must be integers >= 1");
                    qs.push_back(a.get<std::uint64_t>());
                }
                return MapSpec::rotation(RotationAngle(std::move(qs)));
            }
            if (body.contains("golden")) {
                if (horizon == 0) bad("golden rotation needs a horizon N");
                return MapSpec::rotation(golden_rotation(horizon));
            }
            if (body.contains("angle")) return MapSpec::rotation(RotationAngle(continued_fraction(get_rational(body, "angle"))));
            bad("rotation needs \"quotients\", \"golden\" or \"angle\"");
        }
        if (tag == "iet") {
            std::vector<Rational> lengths = rationals_from(field(body, "lengths"));
            const json& p = field(body, "perm");
            if (!p.is_array()) bad("iet perm must be an array");
            std::vector<std::size_t> perm;
            for (const auto& v : p) {
                if (!v.is_number_integer() || v.get<long long>() < 1) bad("iet perm entries are 1-based slots");
                perm.push_back(v.get<std::size_t>());
            }
            return MapSpec::iet(std::move(lengths), std::move(perm));
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        bad(std::string("map: ") + e.what());
    }
    bad("unknown map \"" + tag + "\"");
}

// ---------------------------------------------------------------------------
// Rate and length families

/// {"family": "c/n" | "c/(n log n)" | "c/n^a" | "log n/n" | "table" | "dyadic_floor", ...}.
inline json to_json(const RateSeq& r) {
    using F = RateSeq::Family;
    switch (r.family()) {
    case F::c_over_n: return {{"family", "c/n"}, {"c", to_json(r.c())}};
    case F::c_over_n_log_n: return {{"family", "c/(n log n)"}, {"c", to_json(r.c())}};
    case F::c_over_n_pow: return {{"family", "c/n^a"}, {"c", to_json(r.c())}, {"alpha", to_json(r.alpha())}};
    case F::log_n_over_n: return {{"family", "log n/n"}};
    case F::table: {
        json v = json::array();
        for (const auto& x : r.table_values()) v.push_back(to_json(x));
        return {{"family", "table"}, {"values", v}};
    }
    case F::dyadic_floor: return {{"family", "dyadic_floor"}, {"inner", to_json(r.inner())}};
    }
    return {};
}

inline RateSeq rates_from(const json& j) {
    const json& f = field(j, "family");
    if (!f.is_string()) bad("rate family must be a string");
    const std::string fam = f.get<std::string>();
    auto c = [&] { return j.contains("c") ? get_rational(j, "c") : Rational(1); };
    try {
        if (fam == "c/n") return RateSeq::c_over_n(c());
        if (fam == "c/(n log n)") return RateSeq::c_over_n_log_n(c());
        if (fam == "c/n^a") return RateSeq::c_over_n_pow(c(), get_rational(j, "alpha"));
        if (fam == "log n/n") return RateSeq::log_n_over_n();
        if (fam == "table") return RateSeq::table(rationals_from(field(j, "values")));
        if (fam == "dyadic_floor") return RateSeq::dyadic_floor(rates_from(field(j, "inner")));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        bad(std::string("rates: ") + e.what());
    }
    bad("unknown rate family \"" + fam + "\"");
}

inline json to_json(const LengthFamily& l) {
    using F = LengthFamily::Family;
    switch (l.family()) {
    case F::c_over_n: return {{"family", "c/n"}, {"c", to_json(l.c())}};
    case F::log_n_over_n: return {{"family", "log n/n"}};
    case F::table: {
        json v = json::array();
        for (const auto& x : l.table_values()) v.push_back(to_json(x));
        return {{"family", "table"}, {"values", v}};
    }
    }
    return {};
}

inline LengthFamily lengths_from(const json& j) {
    const json& f = field(j, "family");
    if (!f.is_string()) bad("length family must be a string");
    const std::string fam = f.get<std::string>();
    try {
        if (fam == "c/n") return LengthFamily::c_over_n(j.contains("c") ? get_rational(j, "c") : Rational(1));
        if (fam == "log n/n") return LengthFamily::log_n_over_n();
        if (fam == "table") return LengthFamily::table(rationals_from(field(j, "values")));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        bad(std::string("lengths: ") + e.what());
    }
    bad("unknown length family \"" + fam + "\"");
}

// ---------------------------------------------------------------------------
// Certificates

inline json to_json(const AlmostInvariantCert& c) {
    return {{"kind", "almost_invariant"},
            {"n", c.n},
            {"delta", to_json(c.delta)},
            {"epsilon", to_json(c.epsilon)},
            {"K", c.K},
            {"levels", c.levels},
            {"A", to_json(c.A)},
            {"intersection", to_json(c.intersection)},
            {"intersection_measure", to_json(c.intersection_measure)},
            {"passed", c.passed()}};
}

inline AlmostInvariantCert almost_invariant_from(const json& j) {
    AlmostInvariantCert c;
    c.n = get_u64(j, "n");
    c.delta = get_rational(j, "delta");
    c.epsilon = get_rational(j, "epsilon");
    c.K = static_cast<unsigned>(get_u64(j, "K"));
    c.levels = get_u64(j, "levels");
    c.A = arcset_from(field(j, "A"));
    c.intersection = arcset_from(field(j, "intersection"));
    c.intersection_measure = get_rational(j, "intersection_measure");
    return c;
}

inline json to_json(const SweepEpoch& e) {
    return {{"j", e.j},         {"gamma", to_json(e.gamma)}, {"start", e.start}, {"next", e.next},
            {"n", e.n},         {"K", e.K},                  {"A", to_json(e.A)}};
}

inline SweepEpoch sweep_epoch_from(const json& j) {
    SweepEpoch e;
    e.j = static_cast<unsigned>(get_u64(j, "j"));
    e.gamma = get_rational(j, "gamma");
    e.start = get_u64(j, "start");
    e.next = get_u64(j, "next");
    e.n = get_u64(j, "n");
    e.K = static_cast<unsigned>(get_u64(j, "K"));
    e.A = arcset_from(field(j, "A"));
    return e;
}

inline json schedule_json(const std::vector<SweepEpoch>& s) {
    json out = json::array();
    for (const auto& e : s) out.push_back(to_json(e));
    return out;
}

inline std::vector<SweepEpoch> schedule_from(const json& j) {
    if (!j.is_array()) bad("epochs must be an array");
    std::vector<SweepEpoch> out;
    for (const auto& e : j) out.push_back(sweep_epoch_from(e));
    return out;
}

inline json to_json(const SweepCert& c, const RateSeq& rates) {
    json rows = json::array();
    for (const auto& r : c.rows)
        rows.push_back({{"M", r.M}, {"eps", to_json(r.eps)}, {"measure", to_json(r.measure)}, {"bound", to_json(r.bound)}, {"passed", r.passed}});
    return {{"kind", "sweep"},
            {"rates", to_json(rates)},
            {"horizon", c.horizon},
            {"epochs", schedule_json(c.epochs)},
            {"E", to_json(c.E)},
            {"measure_E", to_json(c.E.measure())},
            {"rows", rows},
            {"passed", c.passed()}};
}

inline SweepCert sweep_from(const json& j) {
    SweepCert c;
    c.horizon = get_u64(j, "horizon");
    c.epochs = schedule_from(field(j, "epochs"));
    c.E = arcset_from(field(j, "E"));
    for (const auto& r : field(j, "rows")) {
        SweepRow row;
        row.M = get_u64(r, "M");
        row.eps = get_rational(r, "eps");
        row.measure = get_rational(r, "measure");
        row.bound = get_rational(r, "bound");
        row.passed = get_bool(r, "passed");
        c.rows.push_back(std::move(row));
    }
    return c;
}

inline json to_json(const InvisibleTargetCert& c, const RateSeq& rates) {
    json epochs = json::array();
    for (const auto& e : c.epochs) epochs.push_back({{"j", e.j}, {"first", e.first}, {"last", e.last}, {"E", to_json(e.E)}});
    json rows = json::array();
    for (const auto& r : c.rows)
        rows.push_back({{"M", r.M},
                        {"epoch", r.epoch},
                        {"eps", to_json(r.eps)},
                        {"measure_B", to_json(r.measure_B)},
                        {"measure_E", to_json(r.measure_E)},
                        {"disjoint", r.disjoint},
                        {"nested", r.nested},
                        {"passed", r.passed}});
    json stored = json::array();
    for (const auto& [m, b] : c.stored_B) stored.push_back({{"M", m}, {"B", to_json(b)}});
    return {{"kind", "invisible_target"},
            {"rates", to_json(rates)},
            {"horizon", c.horizon},
            {"schedule", schedule_json(c.schedule)},
            {"epochs", epochs},
            {"rows", rows},
            {"stored_B", stored},
            {"passed", c.passed()}};
}

inline InvisibleTargetCert invisible_from(const json& j) {
    InvisibleTargetCert c;
    c.horizon = get_u64(j, "horizon");
    c.schedule = schedule_from(field(j, "schedule"));
    for (const auto& e : field(j, "epochs")) {
        InvisibleEpoch ie;
        ie.j = static_cast<unsigned>(get_u64(e, "j"));
        ie.first = get_u64(e, "first");
        ie.last = get_u64(e, "last");
        ie.E = arcset_from(field(e, "E"));
        c.epochs.push_back(std::move(ie));
    }
    for (const auto& r : field(j, "rows")) {
        InvisibleRow row;
        row.M = get_u64(r, "M");
        row.epoch = static_cast<unsigned>(get_u64(r, "epoch"));
        row.eps = get_rational(r, "eps");
        row.measure_B = get_rational(r, "measure_B");
        row.measure_E = get_rational(r, "measure_E");
        row.disjoint = get_bool(r, "disjoint");
        row.nested = get_bool(r, "nested");
        row.passed = get_bool(r, "passed");
        c.rows.push_back(std::move(row));
    }
    for (const auto& s : field(j, "stored_B")) c.stored_B.emplace(get_u64(s, "M"), arcset_from(field(s, "B")));
    return c;
}

inline json to_json(const VisibleTargetCert& c, const RateSeq& rates) {
    json blocks = json::array();
    for (const auto& b : c.blocks) {
        json idx = json::array();
        for (const auto& v : b.indices) idx.push_back({v.n, v.m});
        json jb = {{"j", b.j},
                   {"indices", idx},
                   {"sum", to_json(b.sum)},
                   {"product", to_json(b.product)},
                   {"exp_lower", to_json(b.exp_lower)},
                   {"exp_upper", to_json(b.exp_upper)},
                   {"windows_disjoint", b.windows_disjoint}};
        jb["direct_miss"] = b.direct_miss ? to_json(*b.direct_miss) : json(nullptr);
        jb["passed"] = b.passed();
        blocks.push_back(std::move(jb));
    }
    json runs = json::array();
    for (const auto& r : c.m_runs) runs.push_back({r.m, r.count});
    return {{"kind", "visible_target"}, {"rates", to_json(rates)}, {"scanned", c.scanned}, {"nested", c.nested},
            {"bracket", c.bracket},     {"m_runs", runs},           {"blocks", blocks},     {"passed", c.passed()}};
}

inline VisibleTargetCert visible_from(const json& j) {
    VisibleTargetCert c;
    c.scanned = get_u64(j, "scanned");
    c.nested = get_bool(j, "nested");
    c.bracket = get_bool(j, "bracket");
    for (const auto& r : field(j, "m_runs")) {
        if (!r.is_array() || r.size() != 2) bad("m_runs entries are [m, count]");
        c.m_runs.push_back({r[0].get<unsigned>(), r[1].get<std::uint64_t>()});
    }
    for (const auto& b : field(j, "blocks")) {
        VisibleBlock blk;
        blk.j = static_cast<unsigned>(get_u64(b, "j"));
        for (const auto& v : field(b, "indices")) {
            if (!v.is_array() || v.size() != 2) bad("block indices are [n, m]");
            blk.indices.push_back({v[0].get<std::uint64_t>(), v[1].get<unsigned>()});
        }
        blk.sum = get_rational(b, "sum");
        blk.product = get_rational(b, "product");
        blk.exp_lower = get_rational(b, "exp_lower");
        blk.exp_upper = get_rational(b, "exp_upper");
        blk.windows_disjoint = get_bool(b, "windows_disjoint");
        if (const json& d = field(b, "direct_miss"); !d.is_null()) blk.direct_miss = rational_from(d);
        c.blocks.push_back(std::move(blk));
    }
    return c;
}

inline json to_json(const SmallSweepCert& c, const MapSpec& map) {
    json rows = json::array();
    for (const auto& r : c.rows)
        rows.push_back({{"n", r.n},
                        {"measure", to_json(r.measure)},
                        {"witness_measure", to_json(r.witness_measure)},
                        {"witness_disjoint", r.witness_disjoint},
                        {"passed", r.passed}});
    return {{"kind", "small_sweep"},       {"map", to_json(map)}, {"epsilon", to_json(c.epsilon)},
            {"budget", to_json(c.budget)}, {"seeds", to_json(c.seeds)}, {"E", to_json(c.E)},
            {"measure_E", to_json(c.measure_E)}, {"rows", rows},     {"passed", c.passed()}};
}

inline SmallSweepCert small_sweep_from(const json& j) {
    SmallSweepCert c;
    c.epsilon = get_rational(j, "epsilon");
    c.budget = get_rational(j, "budget");
    c.seeds = arcsets_from(field(j, "seeds"));
    c.E = arcset_from(field(j, "E"));
    c.measure_E = get_rational(j, "measure_E");
    for (const auto& r : field(j, "rows")) {
        SmallSweepRow row;
        row.n = get_u64(r, "n");
        row.measure = get_rational(r, "measure");
        row.witness_measure = get_rational(r, "witness_measure");
        row.witness_disjoint = get_bool(r, "witness_disjoint");
        row.passed = get_bool(r, "passed");
        c.rows.push_back(std::move(row));
    }
    return c;
}

inline json to_json(const Rearrangement& sigma, std::span<const ArcSet> sources, std::span<const ArcSet> targets) {
    json pieces = json::array();
    for (const auto& p : sigma.pieces())
        pieces.push_back({{"lo", to_json(p.lo)}, {"hi", to_json(p.hi)}, {"offset", to_json(p.offset)}});
    json src = json::array(), tgt = json::array();
    for (const auto& s : sources) src.push_back(to_json(s));
    for (const auto& t : targets) tgt.push_back(to_json(t));
    return {{"kind", "rearrangement"}, {"sources", src}, {"targets", tgt}, {"pieces", pieces}, {"passed", true}};
}

/// Re-checks sigma(B_l) = C_l level by level with the recorded pieces.
inline CheckReport check_rearrangement(const json& j) {
    CheckReport r;
    std::vector<TranslationPiece> pieces;
    for (const auto& p : field(j, "pieces")) pieces.push_back({get_rational(p, "lo"), get_rational(p, "hi"), get_rational(p, "offset")});
    std::vector<ArcSet> src = arcsets_from(field(j, "sources"));
    std::vector<ArcSet> tgt = arcsets_from(field(j, "targets"));
    if (src.size() != tgt.size()) r.fail("source and target counts differ");
    try {
        Rearrangement sigma{PiecewiseTranslation(std::move(pieces))};
        for (std::size_t l = 0; l < src.size() && l < tgt.size(); ++l)
            if (sigma.image(src[l]) != tgt[l]) r.fail("level " + std::to_string(l + 1) + ": sigma(B) differs from C");
    } catch (const Error& e) {
        r.fail(std::string("pieces: ") + e.what());
    }
    return r;
}

/// Tail-union record; verify recomputes the union from the map, point and radii.
struct TailUnionRecord {
    MapSpec map = MapSpec::doubling();
    CirclePoint x;
    RateSeq radii = RateSeq::c_over_n(Rational(1));
    std::uint64_t first = 1;
    std::uint64_t last = 1;
    Rational measure;
    Rational threshold;
    bool threshold_passed = false;
};

inline json to_json(const TailUnionRecord& t) {
    return {{"kind", "tail_union"},         {"map", to_json(t.map)},         {"x", to_json(t.x.value())},
            {"radii", to_json(t.radii)},    {"N", t.first},                  {"M", t.last},
            {"measure", to_json(t.measure)}, {"threshold", to_json(t.threshold)}, {"threshold_passed", t.threshold_passed}};
}

inline CheckReport check_tail_union(const json& j) {
    CheckReport r;
    const std::uint64_t first = get_u64(j, "N"), last = get_u64(j, "M");
    TailUnion u = tail_ball_union(map_from(field(j, "map")), CirclePoint(get_rational(j, "x")), rates_from(field(j, "radii")), first, last);
    Rational recorded = get_rational(j, "measure");
    if (u.measure != recorded) r.fail("recorded measure " + to_string(recorded) + " but recomputed " + to_string(u.measure));
    bool pass = u.measure >= get_rational(j, "threshold");
    if (pass != get_bool(j, "threshold_passed")) r.fail("threshold flag disagrees with the recomputed measure");
    return r;
}

/// Re-validates a serialized certificate from scratch. Parse problems are
/// reported as failures; the recorded "passed" flag must match the recomputation.
inline CheckReport verify(const json& j) {
    CheckReport r;
    try {
        const json& k = field(j, "kind");
        if (!k.is_string()) bad("certificate kind must be a string");
        const std::string kind = k.get<std::string>();
        bool recomputed = false;
        if (kind == "almost_invariant") {
            AlmostInvariantCert c = almost_invariant_from(j);
            r = check_almost_invariant(c);
            recomputed = r.ok && c.passed();
        } else if (kind == "sweep") {
            RateSeq rates = rates_from(field(j, "rates"));
            SweepCert c = sweep_from(j);
            r = check_sweep(c, &rates);
            recomputed = r.ok && c.passed();
        } else if (kind == "invisible_target") {
            RateSeq rates = rates_from(field(j, "rates"));
            InvisibleTargetCert c = invisible_from(j);
            r = check_invisible_target(c, &rates);
            recomputed = r.ok && c.passed();
        } else if (kind == "visible_target") {
            RateSeq rates = rates_from(field(j, "rates"));
            VisibleTargetCert c = visible_from(j);
            r = check_visible_target(c, &rates);
            recomputed = r.ok && c.passed();
        } else if (kind == "small_sweep") {
            SmallSweepCert c = small_sweep_from(j);
            r = check_small_sweep(c, map_from(field(j, "map")));
            recomputed = r.ok && c.passed();
        } else if (kind == "rearrangement") {
            r = check_rearrangement(j);
            recomputed = r.ok;
        } else if (kind == "tail_union") {
            r = check_tail_union(j);
            recomputed = r.ok;
        } else {
            bad("unknown certificate kind \"" + kind + "\"");
        }
        if (j.contains("passed") && get_bool(j, "passed") != recomputed && r.ok)
            r.fail("recorded verdict passed=" + std::string(get_bool(j, "passed") ? "true" : "false") + " disagrees with recomputation");
        if (r.ok && !recomputed) r.fail("certificate does not certify its claim");
    } catch (const Error& e) {
        r.fail(e.what());
    } catch (const json::exception& e) {
        r.fail(std::string("malformed certificate: ") + e.what());
    }
    return r;
}

}  // namespace shrink::io
