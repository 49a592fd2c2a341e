// shrink: command-line runner for the shrinking-target toolkit.
//
// Every subcommand takes a JSON config (--config) and/or flags; flags win.
// Outputs start with a metadata block: config hash (FNV-1a of the effective
// config), seed and precision. Exit codes: 0 ok, 2 config, 3 certificate,
// 4 horizon/precision.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shrink/shrink.hpp"

namespace {

using shrink::ArcSet;
using shrink::CirclePoint;
using shrink::Error;
using shrink::ErrorKind;
using shrink::MapSpec;
using shrink::Rational;
using shrink::RateSeq;
using json = shrink::io::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCertificate = 3;
constexpr int kExitHorizon = 4;

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::certificate: return kExitCertificate;
    case ErrorKind::horizon:
    case ErrorKind::infeasible: return kExitHorizon;
    default: return kExitConfig;
    }
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::config, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, what + " is not valid JSON: " + e.what());
    }
}

// Raw flag values; unset flags leave the config file untouched.
struct Flags {
    std::string config_path, out, map, x, y, target, family, c, alpha, checkpoints, certificate;
    std::optional<std::uint64_t> N, M, n_min, J, trials, seed, store, k;
    std::optional<std::string> threshold;
    bool dyadic_floor = false;
};

json map_flag(const std::string& s) {
    if (s.empty()) return nullptr;
    if (s.front() == '{') return parse_json(s, "--map");
    if (s == "doubling") return {{"doubling", json::object()}};
    if (s == "odometer") return {{"odometer", json::object()}};
    if (s == "golden") return {{"rotation", {{"golden", true}}}};
    if (s.rfind("angle:", 0) == 0) return {{"rotation", {{"angle", s.substr(6)}}}};
    if (s.rfind("rotation:", 0) == 0) {
        json q = json::array();
        std::stringstream ss(s.substr(9));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                q.push_back(std::stoull(item));
            } catch (const std::exception&) {
                throw Error(ErrorKind::config, "bad partial quotient \"" + item + "\"");
            }
        }
        return {{"rotation", {{"quotients", q}}}};
    }
    throw Error(ErrorKind::config, "unknown --map \"" + s + "\" (doubling, odometer, golden, rotation:a1,a2,..., angle:p/q or JSON)");
}

json effective_config(const std::string& command, const Flags& f) {
    json cfg = json::object();
    if (!f.config_path.empty()) {
        cfg = parse_json(read_file(f.config_path), f.config_path);
        if (!cfg.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
    }
    cfg["command"] = command;
    if (!f.map.empty()) cfg["map"] = map_flag(f.map);
    if (!f.x.empty()) cfg["x"] = f.x;
    if (!f.y.empty()) cfg["y"] = f.y;
    if (!f.target.empty()) cfg["target"] = f.target;
    if (f.N) cfg["N"] = *f.N;
    if (f.M) cfg["M"] = *f.M;
    if (f.n_min) cfg["n_min"] = *f.n_min;
    if (f.J) cfg["J"] = *f.J;
    if (f.trials) cfg["trials"] = *f.trials;
    if (f.seed) cfg["seed"] = *f.seed;
    if (f.store) cfg["store_sets_through"] = *f.store;
    if (f.threshold) cfg["threshold"] = *f.threshold;
    if (!f.checkpoints.empty()) cfg["checkpoints"] = f.checkpoints;
    if (!f.certificate.empty()) cfg["certificate"] = f.certificate;
    if (!f.out.empty()) cfg["out"] = f.out;
    if (!f.family.empty()) {
        json fam = {{"family", f.family}};
        if (!f.c.empty()) fam["c"] = f.c;
        if (!f.alpha.empty()) fam["alpha"] = f.alpha;
        if (f.k) fam["k"] = *f.k;
        if (f.dyadic_floor) fam = {{"family", "dyadic_floor"}, {"inner", fam}};
        cfg[command.rfind("shepp", 0) == 0 ? "lengths" : "rates"] = fam;
    }
    return cfg;
}

struct Run {
    std::string command;
    json cfg;
    std::string hash;

    std::uint64_t u64(const char* key) const {
        if (!cfg.contains(key)) throw Error(ErrorKind::config, std::string("missing \"") + key + "\" (flag --" + key + ")");
        return shrink::io::get_u64(cfg, key);
    }
    std::uint64_t u64_or(const char* key, std::uint64_t def) const { return cfg.contains(key) ? u64(key) : def; }
    Rational rational_or(const char* key, Rational def) const {
        return cfg.contains(key) ? shrink::io::get_rational(cfg, key) : def;
    }
    MapSpec map(std::uint64_t horizon) const {
        if (!cfg.contains("map")) throw Error(ErrorKind::config, "missing \"map\" (flag --map)");
        return shrink::io::map_from(cfg["map"], horizon);
    }
    // "c/(n+k)" is expanded to an explicit table of `count` entries.
    static json expand_rule(const json& r, std::uint64_t count) {
        if (r.contains("family") && r["family"] == "dyadic_floor")
            return {{"family", "dyadic_floor"}, {"inner", expand_rule(shrink::io::field(r, "inner"), count)}};
        if (!r.contains("family") || r["family"] != "c/(n+k)") return r;
        Rational c = r.contains("c") ? shrink::io::get_rational(r, "c") : Rational(1);
        std::uint64_t k = r.contains("k") ? shrink::io::get_u64(r, "k") : 0;
        json values = json::array();
        for (std::uint64_t n = 1; n <= count; ++n)
            values.push_back(shrink::to_string(c / Rational(shrink::Integer(static_cast<unsigned long>(n + k)))));
        return {{"family", "table"}, {"values", values}};
    }
    RateSeq rates(std::uint64_t count) const {
        if (!cfg.contains("rates")) throw Error(ErrorKind::config, "missing \"rates\" (flag --family)");
        return shrink::io::rates_from(expand_rule(cfg["rates"], count));
    }
    shrink::LengthFamily lengths() const {
        if (!cfg.contains("lengths")) throw Error(ErrorKind::config, "missing \"lengths\" (flag --family)");
        return shrink::io::lengths_from(cfg["lengths"]);
    }
    CirclePoint point(const char* key) const { return CirclePoint(rational_or(key, Rational(0))); }

    json meta(const std::string& precision) const {
        json m = {{"command", command}, {"config_hash", hash}, {"precision", precision}};
        m["seed"] = cfg.contains("seed") ? cfg["seed"] : json(nullptr);
        return m;
    }
    void emit(const std::string& text) const {
        if (cfg.contains("out")) {
            std::string path = cfg["out"].get<std::string>();
            std::ofstream out(path, std::ios::binary);
            if (!out) throw Error(ErrorKind::config, "cannot write " + path);
            out << text;
        } else {
            std::cout << text;
        }
    }
    void emit_json(json body, const std::string& precision) const {
        json out = {{"meta", meta(precision)}};
        for (auto& [k, v] : body.items()) out[k] = std::move(v);
        emit(out.dump(1) + "\n");
    }
    std::string csv_header(const std::string& precision, const std::vector<std::string>& extra = {}) const {
        std::string s = "# command=" + command + "\n# config_hash=" + hash + "\n# seed=" +
                        (cfg.contains("seed") ? cfg["seed"].dump() : std::string("none")) + "\n# precision=" + precision + "\n";
        for (const auto& e : extra) s += "# " + e + "\n";
        return s;
    }
};

std::string dec(const Rational& r) { return shrink::to_decimal(r, 12); }

int cmd_orbit(const Run& run) {
    const std::uint64_t N = run.u64("N");
    MapSpec map = run.map(N);
    std::string out = run.csv_header("exact") + "n,point,point_exact\n";
    shrink::OrbitStepper step(map, run.point("x"));
    for (std::uint64_t n = 1; n <= N; ++n) {
        const CirclePoint& p = step.next();
        out += std::to_string(n) + "," + dec(p.value()) + "," + shrink::to_string(p.value()) + "\n";
    }
    run.emit(out);
    return kExitOk;
}

shrink::TargetSeq target_seq(const Run& run, std::uint64_t N) {
    const std::string kind = run.cfg.value("target", std::string("ball"));
    RateSeq radii = run.rates(N);
    if (kind == "ball") return shrink::TargetSeq::balls(run.point("y"), radii);
    if (kind == "self") return shrink::TargetSeq::self_balls(radii);
    if (kind == "interval") {
        std::vector<ArcSet> table;
        table.reserve(N);
        for (std::uint64_t n = 1; n <= N; ++n) {
            Rational e = radii.at(n);
            table.push_back(ArcSet::interval(Rational(0), e > 1 ? Rational(1) : e));
        }
        return shrink::TargetSeq::sets(std::move(table));
    }
    throw Error(ErrorKind::config, "target must be ball, self or interval");
}

int cmd_hits(const Run& run) {
    const std::uint64_t N = run.u64("N");
    MapSpec map = run.map(N);
    shrink::TargetSeq tg = target_seq(run, N);
    const CirclePoint x = run.point("x");
    shrink::OrbitStepper step(map, x);
    std::string body;
    std::uint64_t count = 0;
    for (std::uint64_t n = 1; n <= N; ++n) {
        const CirclePoint& p = step.next();
        bool h = tg.hit(n, p, x);
        count += h;
        body += std::to_string(n) + "," + (h ? "1" : "0") + "," + dec(p.value()) + "," + shrink::to_string(p.value()) + "\n";
    }
    run.emit(run.csv_header("exact", {"hit_count=" + std::to_string(count)}) + "n,hit,point,point_exact\n" + body);
    return kExitOk;
}

int cmd_scaled_distance(const Run& run) {
    const std::uint64_t N = run.u64("N");
    MapSpec map = run.map(N);
    const CirclePoint x = run.point("x");
    const CirclePoint y = run.cfg.contains("y") ? run.point("y") : x;
    std::vector<Rational> v = shrink::scaled_distance_series(map, x, y, N);
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[best]) best = i;
    std::string out = run.csv_header("exact", {"min=" + shrink::to_string(v[best]), "argmin=" + std::to_string(best + 1)}) +
                      "n,scaled_distance,scaled_distance_exact\n";
    for (std::size_t i = 0; i < v.size(); ++i) out += std::to_string(i + 1) + "," + dec(v[i]) + "," + shrink::to_string(v[i]) + "\n";
    run.emit(out);
    return kExitOk;
}

int cmd_cover_profile(const Run& run) {
    const std::uint64_t N = run.u64("N");
    MapSpec map = run.map(N);
    shrink::CoverProfile prof = shrink::covering_profile(map, run.point("x"), N);
    std::string out = run.csv_header("exact", {"sup_scaled=" + shrink::to_string(prof.sup_scaled),
                                               "argmax=" + std::to_string(prof.argmax)}) +
                      "n,r_n_exact,r_n,n_r_n\n";
    for (std::uint64_t n = 1; n <= N; ++n)
        out += std::to_string(n) + "," + shrink::to_string(prof.values[n - 1]) + "," + dec(prof.values[n - 1]) + "," +
               dec(prof.scaled[n - 1]) + "\n";
    run.emit(out);
    if (run.cfg.contains("checkpoints")) {
        shrink::RateReport rep = shrink::rate_report(prof, run.u64_or("n_min", 1));
        json cps = json::array();
        for (const auto& c : rep.checkpoints)
            cps.push_back({{"n", c.n}, {"r_n", shrink::io::to_json(c.r)}, {"scaled", shrink::io::to_json(c.scaled)}});
        json doc = {{"meta", run.meta("exact")},
                    {"kind", "rate_report"},
                    {"n_min", rep.n_min},
                    {"sup_scaled", shrink::io::to_json(rep.sup_scaled)},
                    {"argmax", rep.argmax},
                    {"checkpoints", cps}};
        const std::string path = run.cfg["checkpoints"].get<std::string>();
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorKind::config, "cannot write " + path);
        f << doc.dump(1) << "\n";
    }
    return kExitOk;
}

int cmd_tail_union(const Run& run) {
    const std::uint64_t N = run.u64("N");
    const std::uint64_t M = run.u64("M");
    shrink::io::TailUnionRecord t;
    t.map = run.map(M);
    t.x = run.point("x");
    t.radii = run.rates(M);
    t.first = N;
    t.last = M;
    t.measure = shrink::tail_ball_union(t.map, t.x, t.radii, N, M).measure;
    t.threshold = run.rational_or("threshold", Rational(1));
    t.threshold_passed = t.measure >= t.threshold;
    run.emit_json(shrink::io::to_json(t), "exact");
    return kExitOk;
}

int cmd_construct_invisible(const Run& run) {
    const std::uint64_t N = run.u64("N");
    RateSeq rates = run.rates(N);
    auto cert = shrink::invisible_target(rates, N, run.u64_or("store_sets_through", 64));
    run.emit_json(shrink::io::to_json(cert, rates), "exact");
    return cert.passed() ? kExitOk : kExitCertificate;
}

int cmd_construct_visible(const Run& run) {
    const std::uint64_t J = run.u64("J");
    const std::uint64_t scan = run.u64_or("max_scan", shrink::kDefaultVisibleScan);
    RateSeq rates = run.rates(scan);
    auto cert = shrink::visible_target_dyadic(rates, static_cast<unsigned>(J), scan);
    run.emit_json(shrink::io::to_json(cert, rates), "exact");
    return cert.passed() ? kExitOk : kExitCertificate;
}

int cmd_construct_sweep(const Run& run) {
    if (run.cfg.contains("seeds")) {
        MapSpec map = run.map(0);
        auto cert = shrink::generic_small_sweep(shrink::io::arcsets_from(run.cfg["seeds"]), map,
                                                shrink::io::get_rational(run.cfg, "epsilon"));
        run.emit_json(shrink::io::to_json(cert, map), "exact");
        return cert.passed() ? kExitOk : kExitCertificate;
    }
    const std::uint64_t N = run.u64("N");
    RateSeq rates = run.rates(N);
    auto cert = shrink::slow_sweep_complement(rates, N);
    run.emit_json(shrink::io::to_json(cert, rates), "exact");
    return cert.passed() ? kExitOk : kExitCertificate;
}

// Sources: nested sets from an invisible-target certificate (its stored B_M) or
// an explicit "sources" list; targets default to [0, m(B)).
int cmd_rearrange(const Run& run) {
    std::vector<ArcSet> sources;
    if (run.cfg.contains("certificate")) {
        json cert = parse_json(read_file(run.cfg["certificate"].get<std::string>()), "certificate");
        if (cert.value("kind", std::string()) != "invisible_target")
            throw Error(ErrorKind::config, "rearrange needs an invisible_target certificate");
        for (const auto& s : shrink::io::field(cert, "stored_B")) sources.push_back(shrink::io::arcset_from(shrink::io::field(s, "B")));
    } else {
        sources = shrink::io::arcsets_from(shrink::io::field(run.cfg, "sources"));
    }
    std::vector<ArcSet> targets;
    if (run.cfg.contains("targets")) {
        targets = shrink::io::arcsets_from(run.cfg["targets"]);
    } else {
        std::vector<Rational> m;
        for (const auto& s : sources) m.push_back(s.measure());
        targets = shrink::interval_targets(m);
    }
    shrink::Rearrangement sigma = shrink::rearrangement_map(sources, targets);
    run.emit_json(shrink::io::to_json(sigma, sources, targets), "exact");
    return kExitOk;
}

int cmd_shepp(const Run& run) {
    const std::uint64_t N = run.u64("N");
    const std::uint64_t trials = run.u64("trials");
    const std::uint64_t seed = run.u64("seed");
    shrink::LengthFamily lengths = run.lengths();
    shrink::CoverageEstimate est = shrink::coverage_probability(seed, lengths, N, trials);
    json body = {{"kind", "coverage_estimate"},
                 {"lengths", shrink::io::to_json(lengths)},
                 {"N", N},
                 {"trials", est.trials},
                 {"covered", est.covered},
                 {"estimate", shrink::io::to_json(est.estimate)},
                 {"wilson_low", est.wilson_low},
                 {"wilson_high", est.wilson_high},
                 {"certain", est.certain},
                 {"classification", shrink::to_string(shrink::classify_lengths(lengths))}};
    run.emit_json(std::move(body), "exact unions; wilson interval in double");
    return kExitOk;
}

int cmd_shepp_criterion(const Run& run) {
    const std::uint64_t N = run.u64("N");
    shrink::LengthFamily lengths = run.lengths();
    auto sums = shrink::shepp_partial_sums(lengths, N);
    std::string out = run.csv_header("decimal" + std::to_string(shrink::kSheppPrecisionDigits),
                                     {"lengths=" + lengths.describe(),
                                      "classification=" + std::string(shrink::to_string(shrink::classify_lengths(lengths)))}) +
                      "n,partial_sum\n";
    for (std::uint64_t n = 1; n <= N; ++n) out += std::to_string(n) + "," + shrink::to_string(sums[n - 1], 30) + "\n";
    run.emit(out);
    return kExitOk;
}

int cmd_verify(const std::string& path) {
    json cert = parse_json(read_file(path), path);
    shrink::CheckReport r = shrink::io::verify(cert);
    if (r.ok) {
        std::cout << "OK " << cert.value("kind", std::string("?")) << "\n";
        return kExitOk;
    }
    std::cout << "FAIL " << r.failure << "\n";
    std::cerr << "certificate: " << r.failure << "\n";
    return kExitCertificate;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shrink: exact shrinking-target experiments on the circle"};
    app.require_subcommand(1);
    Flags f;
    std::string verify_path;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config_path, "JSON config file");
        sub->add_option("--out", f.out, "output path (default stdout)");
    };
    auto orbit_opts = [&](CLI::App* sub) {
        sub->add_option("--map", f.map, "doubling | odometer | golden | rotation:a1,a2,... | angle:p/q | JSON");
        sub->add_option("--x", f.x, "starting point p/q");
        sub->add_option("--N", f.N, "horizon");
    };
    auto rate_opts = [&](CLI::App* sub) {
        sub->add_option("--family", f.family, "c/n | c/(n log n) | c/n^a | log n/n | c/(n+k)");
        sub->add_option("--c", f.c, "constant c (p/q)");
        sub->add_option("--alpha", f.alpha, "exponent for c/n^a");
        sub->add_option("--k", f.k, "index shift for c/(n+k)");
        sub->add_flag("--dyadic-floor", f.dyadic_floor, "round each rate down to a power of two");
    };

    std::vector<std::pair<std::string, CLI::App*>> subs;
    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* s = app.add_subcommand(name, help);
        common(s);
        subs.emplace_back(name, s);
        return s;
    };

    orbit_opts(add("orbit", "orbit points tau^n x, n = 1..N (CSV)"));
    {
        auto* s = add("hits", "hit times against a shrinking target (CSV)");
        orbit_opts(s);
        rate_opts(s);
        s->add_option("--target", f.target, "ball (centre --y) | self | interval [0, eps_n)");
        s->add_option("--y", f.y, "ball centre p/q");
    }
    {
        auto* s = add("scaled-distance", "n * d(tau^n x, y) series (CSV)");
        orbit_opts(s);
        s->add_option("--y", f.y, "reference point (default x)");
    }
    {
        auto* s = add("cover-profile", "covering radii r_n (CSV), optional rate report (JSON)");
        orbit_opts(s);
        s->add_option("--checkpoints", f.checkpoints, "write the rate report JSON here");
        s->add_option("--n-min", f.n_min, "lower end for sup n r_n");
    }
    {
        auto* s = add("tail-union", "measure of the union of B_{eps_n}(tau^n x), N <= n <= M (JSON)");
        orbit_opts(s);
        rate_opts(s);
        s->add_option("--M", f.M, "last index");
        s->add_option("--threshold", f.threshold, "pass when the measure reaches this value (default 1)");
    }
    {
        auto* s = add("construct-invisible", "invisible target certificate on the odometer (JSON)");
        rate_opts(s);
        s->add_option("--N", f.N, "horizon");
        s->add_option("--store", f.store, "store explicit B_M for M up to this value");
    }
    {
        auto* s = add("construct-visible", "visible target certificate on the doubling map (JSON)");
        rate_opts(s);
        s->add_option("--J", f.J, "number of blocks");
    }
    {
        auto* s = add("construct-sweep", "slowly sweeping set certificate (JSON)");
        rate_opts(s);
        s->add_option("--N", f.N, "horizon");
        s->add_option("--map", f.map, "map for a seeds-based sweep");
    }
    {
        auto* s = add("rearrange", "rearrangement sending nested sets to intervals (JSON)");
        s->add_option("--certificate", f.certificate, "invisible_target certificate supplying the sets");
    }
    {
        auto* s = add("shepp", "Monte Carlo coverage by random arcs (JSON)");
        rate_opts(s);
        s->add_option("--N", f.N, "number of arcs");
        s->add_option("--trials", f.trials, "trials");
        s->add_option("--seed", f.seed, "master seed");
    }
    {
        auto* s = add("shepp-criterion", "partial sums of exp(l_1 + ... + l_n) / n^2 (CSV)");
        rate_opts(s);
        s->add_option("--N", f.N, "number of terms");
    }
    CLI::App* verify = app.add_subcommand("verify", "re-check a certificate file");
    verify->add_option("certificate", verify_path, "certificate JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (verify->parsed()) return cmd_verify(verify_path);
        for (const auto& [name, sub] : subs) {
            if (!sub->parsed()) continue;
            Run run;
            run.command = name;
            run.cfg = effective_config(name, f);
            json hashed = run.cfg;
            hashed.erase("out");
            hashed.erase("checkpoints");
            run.hash = hex64(fnv1a(hashed.dump()));
            if (name == "orbit") return cmd_orbit(run);
            if (name == "hits") return cmd_hits(run);
            if (name == "scaled-distance") return cmd_scaled_distance(run);
            if (name == "cover-profile") return cmd_cover_profile(run);
            if (name == "tail-union") return cmd_tail_union(run);
            if (name == "construct-invisible") return cmd_construct_invisible(run);
            if (name == "construct-visible") return cmd_construct_visible(run);
            if (name == "construct-sweep") return cmd_construct_sweep(run);
            if (name == "rearrange") return cmd_rearrange(run);
            if (name == "shepp") return cmd_shepp(run);
            if (name == "shepp-criterion") return cmd_shepp_criterion(run);
        }
    } catch (const Error& e) {
        std::cerr << "shrink: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        std::cerr << "shrink: config: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
