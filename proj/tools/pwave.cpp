// Command-line frontend: simulations, ratio studies, transforms and the Q_k
// table, with CSV/JSON artifacts.
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pwave/report.hpp"
#include "pwave/verify.hpp"

#ifndef PWAVE_VERSION
#define PWAVE_VERSION "dev"
#endif

using json = nlohmann::json;
using namespace pwave;

namespace {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct settings {
    std::optional<std::string> command, target, out, potential, cubic, profile;
    std::optional<long long> n, seed, workers, count, kmax, k;
    std::optional<double> T, dt, eps, s, extra_s, delta, scale;
    // ensemble overrides
    std::optional<long long> k_min, k_max, jj_max, channels, bumps;
    std::optional<double> rho_lo, rho_hi, width_lo, width_hi;
};

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

json echo(const settings& s) {
    json j;
    put(j, "command", s.command);
    put(j, "target", s.target);
    put(j, "out", s.out);
    put(j, "n", s.n);
    put(j, "seed", s.seed);
    put(j, "workers", s.workers);
    put(j, "count", s.count);
    put(j, "kmax", s.kmax);
    put(j, "k", s.k);
    put(j, "T", s.T);
    put(j, "dt", s.dt);
    put(j, "eps", s.eps);
    put(j, "s", s.s);
    put(j, "extra_s", s.extra_s);
    put(j, "potential", s.potential);
    put(j, "delta", s.delta);
    put(j, "scale", s.scale);
    put(j, "cubic", s.cubic);
    put(j, "profile", s.profile);
    json e;
    put(e, "k_min", s.k_min);
    put(e, "k_max", s.k_max);
    put(e, "jj_max", s.jj_max);
    put(e, "channels", s.channels);
    put(e, "bumps", s.bumps);
    put(e, "rho_lo", s.rho_lo);
    put(e, "rho_hi", s.rho_hi);
    put(e, "width_lo", s.width_lo);
    put(e, "width_hi", s.width_hi);
    if (!e.empty()) j["ensemble"] = e;
    return j;
}

void read_field(const json& v, const std::string& key, std::optional<std::string>& dst) {
    if (!v.is_string()) throw config_error("config: field '" + key + "' must be a string");
    dst = v.get<std::string>();
}
void read_field(const json& v, const std::string& key, std::optional<long long>& dst) {
    if (!v.is_number_integer()) throw config_error("config: field '" + key + "' must be an integer");
    dst = v.get<long long>();
}
void read_field(const json& v, const std::string& key, std::optional<double>& dst) {
    if (!v.is_number()) throw config_error("config: field '" + key + "' must be a number");
    dst = v.get<double>();
}

settings load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot read '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config: top level must be an object");
    settings s;
    for (auto& [key, v] : j.items()) {
        if (key == "command") read_field(v, key, s.command);
        else if (key == "target") read_field(v, key, s.target);
        else if (key == "out") read_field(v, key, s.out);
        else if (key == "potential") read_field(v, key, s.potential);
        else if (key == "cubic") read_field(v, key, s.cubic);
        else if (key == "profile") read_field(v, key, s.profile);
        else if (key == "n") read_field(v, key, s.n);
        else if (key == "seed") read_field(v, key, s.seed);
        else if (key == "workers") read_field(v, key, s.workers);
        else if (key == "count") read_field(v, key, s.count);
        else if (key == "kmax") read_field(v, key, s.kmax);
        else if (key == "k") read_field(v, key, s.k);
        else if (key == "T") read_field(v, key, s.T);
        else if (key == "dt") read_field(v, key, s.dt);
        else if (key == "eps") read_field(v, key, s.eps);
        else if (key == "s") read_field(v, key, s.s);
        else if (key == "extra_s") read_field(v, key, s.extra_s);
        else if (key == "delta") read_field(v, key, s.delta);
        else if (key == "scale") read_field(v, key, s.scale);
        else if (key == "ensemble") {
            if (!v.is_object()) throw config_error("config: field 'ensemble' must be an object");
            for (auto& [ek, ev] : v.items()) {
                std::string name = "ensemble." + ek;
                if (ek == "k_min") read_field(ev, name, s.k_min);
                else if (ek == "k_max") read_field(ev, name, s.k_max);
                else if (ek == "jj_max") read_field(ev, name, s.jj_max);
                else if (ek == "channels") read_field(ev, name, s.channels);
                else if (ek == "bumps") read_field(ev, name, s.bumps);
                else if (ek == "rho_lo") read_field(ev, name, s.rho_lo);
                else if (ek == "rho_hi") read_field(ev, name, s.rho_hi);
                else if (ek == "width_lo") read_field(ev, name, s.width_lo);
                else if (ek == "width_hi") read_field(ev, name, s.width_hi);
                else throw config_error("config: unknown field '" + name + "'");
            }
        } else
            throw config_error("config: unknown field '" + key + "'");
    }
    return s;
}

template <class T>
void overlay(std::optional<T>& dst, const std::optional<T>& src) {
    if (src) dst = src;
}

void overlay(settings& a, const settings& b) {
    overlay(a.command, b.command);
    overlay(a.target, b.target);
    overlay(a.out, b.out);
    overlay(a.potential, b.potential);
    overlay(a.cubic, b.cubic);
    overlay(a.profile, b.profile);
    overlay(a.n, b.n);
    overlay(a.seed, b.seed);
    overlay(a.workers, b.workers);
    overlay(a.count, b.count);
    overlay(a.kmax, b.kmax);
    overlay(a.k, b.k);
    overlay(a.T, b.T);
    overlay(a.dt, b.dt);
    overlay(a.eps, b.eps);
    overlay(a.s, b.s);
    overlay(a.extra_s, b.extra_s);
    overlay(a.delta, b.delta);
    overlay(a.scale, b.scale);
}

const std::set<std::string> dirac_ids = {"dirac", "freedirac", "smoothdir", "smoonablau", "enddiracV", "enddiracVang", "energyang"};
const std::set<std::string> wave_ids = {"wave", "endWEV", "smooWE"};

const std::set<std::string>& targets_of(const std::string& cmd) {
    static const std::set<std::string> sim = {"nld", "linear"};
    static const std::set<std::string> ver = {"lemma", "lemmaQk", "strich3D", "strichartz1", "strichartz2", "genineq2",
                                              "dirac", "freedirac", "smoothdir", "smoonablau", "enddiracV",
                                              "enddiracVang", "energyang", "wave", "endWEV", "smooWE", "prodest",
                                              "equivalence", "nld"};
    static const std::set<std::string> tr = {"hankel"};
    static const std::set<std::string> lem = {"qk"};
    if (cmd == "simulate") return sim;
    if (cmd == "verify") return ver;
    if (cmd == "transform") return tr;
    if (cmd == "lemma") return lem;
    throw config_error("config: field 'command' must be simulate, verify, transform or lemma (got '" + cmd + "')");
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw config_error("config: " + msg);
}

// Checks every field against the preconditions of the selected command
// before anything is computed or written.
void validate(const settings& s) {
    require(s.command.has_value(), "field 'command' is missing");
    require(s.target.has_value(), "field 'target' is missing");
    const auto& t = targets_of(*s.command);
    require(t.count(*s.target) > 0, "field 'target': '" + *s.target + "' is not a target of '" + *s.command + "'");
    if (s.n) require(*s.n >= 3, "field 'n' must be >= 3");
    if (*s.target == "strich3D" && s.n) require(*s.n == 3, "field 'n' must be 3 for strich3D");
    if (*s.target == "strichartz1" && s.n) require(*s.n >= 4, "field 'n' must be >= 4 for strichartz1 (n = 3 is strich3D)");
    if (s.seed) require(*s.seed >= 0, "field 'seed' must be >= 0");
    if (s.workers) require(*s.workers >= 1 && *s.workers <= 256, "field 'workers' must be in [1, 256]");
    if (s.count) require(*s.count >= 1, "field 'count' must be >= 1");
    if (s.kmax) require(*s.kmax >= 0 && *s.kmax <= 2000, "field 'kmax' must be in [0, 2000]");
    if (s.k) require(*s.k >= 0 && *s.k <= 64, "field 'k' must be in [0, 64]");
    if (s.T) require(*s.T > 0, "field 'T' must be > 0");
    if (s.dt) require(*s.dt > 0, "field 'dt' must be > 0");
    if (s.eps) require(*s.eps > 0, "field 'eps' must be > 0");
    if (s.s) require(*s.s > 1, "field 's' must be > 1");
    if (s.delta) require(*s.delta >= 0, "field 'delta' must be >= 0");
    if (s.scale) require(std::isfinite(*s.scale), "field 'scale' must be finite");
    if (s.potential) {
        const auto& p = *s.potential;
        require(p == "none" || p == "bracket" || p == "gaussian", "field 'potential' must be none, bracket or gaussian");
    }
    if (s.cubic) {
        const auto& c = *s.cubic;
        require(c == "none" || c == "mass_cubic" || c == "soler", "field 'cubic' must be none, mass_cubic or soler");
    }
    if (s.profile) require(*s.profile == "gaussian" || *s.profile == "bumps", "field 'profile' must be gaussian or bumps");
    if (s.k_min) require(*s.k_min >= 0, "field 'ensemble.k_min' must be >= 0");
    if (s.k_max) require(*s.k_max >= s.k_min.value_or(0), "field 'ensemble.k_max' must be >= k_min");
    if (s.jj_max) require(*s.jj_max >= 1 && *s.jj_max % 2 == 1, "field 'ensemble.jj_max' must be an odd positive integer");
    if (s.channels) require(*s.channels >= 1, "field 'ensemble.channels' must be >= 1");
    if (s.bumps) require(*s.bumps >= 1, "field 'ensemble.bumps' must be >= 1");
    if (s.rho_lo) require(*s.rho_lo > 0, "field 'ensemble.rho_lo' must be > 0");
    if (s.rho_lo && s.rho_hi) require(*s.rho_hi > *s.rho_lo, "field 'ensemble.rho_hi' must exceed rho_lo");
    if (s.width_lo) require(*s.width_lo > 0, "field 'ensemble.width_lo' must be > 0");
    if (s.width_lo && s.width_hi) require(*s.width_hi >= *s.width_lo, "field 'ensemble.width_hi' must be >= width_lo");
}

void apply_ensemble(ensemble_spec& e, const settings& s) {
    if (s.seed) e.seed = static_cast<std::uint64_t>(*s.seed);
    if (s.count) e.count = static_cast<int>(*s.count);
    if (s.k_min) e.k_min = static_cast<int>(*s.k_min);
    if (s.k_max) e.k_max = static_cast<int>(*s.k_max);
    if (s.jj_max) e.jj_max = static_cast<int>(*s.jj_max);
    if (s.channels) e.channels = static_cast<int>(*s.channels);
    if (s.bumps) e.bumps = static_cast<int>(*s.bumps);
    if (s.rho_lo) e.rho_lo = *s.rho_lo;
    if (s.rho_hi) e.rho_hi = *s.rho_hi;
    if (s.width_lo) e.width_lo = *s.width_lo;
    if (s.width_hi) e.width_hi = *s.width_hi;
}

struct outcome {
    std::vector<ratio_study> studies;
    std::vector<check_entry> checks;
    json summary;
    json grid;
    std::optional<std::string> trajectory;
    std::optional<std::string> profile;
    bool pass = false;
};

json study_grid_meta(double data_radius, double rho_hi, double refine) {
    return {{"recipe", "study_grids"}, {"r_min", 1e-3}, {"rho_min", 1e-3}, {"data_radius", data_radius},
            {"rho_max", rho_hi + 0.5}, {"samples_per_oscillation", 5}, {"refine_factor", refine}};
}

json nld_grid_meta(const nld_grid_params& g, double refine) {
    return {{"r_min", g.r_min}, {"r_max", g.r_max}, {"n_log", g.n_log}, {"n_lin", g.n_lin},
            {"rho_min", g.rho_min}, {"rho_max", g.rho_max}, {"k_log", g.k_log}, {"k_lin", g.k_lin},
            {"sphere_L", g.L}, {"jj_max", g.jj_max}, {"refine_factor", refine}};
}

outcome finish_studies(std::vector<ratio_study> st) {
    outcome o;
    o.pass = !st.empty();
    for (auto& x : st) {
        o.summary["studies"].push_back(study_summary(x));
        o.pass = o.pass && x.pass;
    }
    o.summary["pass"] = o.pass;
    o.studies = std::move(st);
    return o;
}

potential_spec dirac_potential(const settings& s) {
    return radial_potential_profile(s.potential.value_or("none"), s.delta.value_or(0.05), 1.5, s.scale.value_or(1.0));
}

nld_study_config nld_config(const settings& s, bool linear) {
    auto c = default_nld_config();
    apply_ensemble(c.ens, s);
    if (s.eps) c.eps = *s.eps;
    if (s.s) c.s = *s.s;
    if (s.T) c.T = *s.T;
    if (s.dt) c.dt = *s.dt;
    if (s.cubic) c.cubic = *s.cubic;
    if (linear) c.cubic = "none";
    c.V = dirac_potential(s);
    return c;
}

outcome run_lemma(const settings& s) {
    auto L = lemma_qk_study(static_cast<int>(s.n.value_or(3)), static_cast<int>(s.kmax.value_or(200)));
    outcome o;
    o.studies.push_back(lemma_as_ratio_study(L));
    o.summary = {{"studies", {study_summary(o.studies[0])}}, {"n", L.n}, {"kmax", L.kmax}, {"worst", L.worst}, {"pass", L.pass}};
    o.grid = {{"x_points", 4096}};
    o.pass = L.pass;
    return o;
}

outcome run_simulate(const settings& s) {
    const bool linear = *s.target == "linear";
    auto c = nld_config(s, linear);
    nld_run run;
    auto lv = nld_level_run(c, 0, &run);
    outcome o;
    o.trajectory = trajectory_csv(run.diag);
    bool bound = lv.sup_lambda_h1 <= 2 * c.eps;
    bool stable = lv.x_T <= 1.05 * lv.x_half;
    o.pass = bound && stable;
    o.summary = {{"equation", linear ? "linear Dirac" : "cubic Dirac"},
                 {"cubic", c.cubic},
                 {"potential", c.V.name},
                 {"dt", lv.dt},
                 {"data_norm", json_number(lv.data_norm)},
                 {"sup_lambda_h1", json_number(lv.sup_lambda_h1)},
                 {"x_half", json_number(lv.x_half)},
                 {"x_T", json_number(lv.x_T)},
                 {"l2_drift", json_number(lv.l2_drift)},
                 {"bound_ok", bound},
                 {"x_stable", stable},
                 {"pass", o.pass}};
    o.grid = nld_grid_meta(c.grid, c.refine_factor);
    return o;
}

outcome run_transform(const settings& s) {
    const int n = static_cast<int>(s.n.value_or(3)), k = static_cast<int>(s.k.value_or(0));
    const std::string prof = s.profile.value_or("gaussian");
    grid_pair gp;
    cvec c;
    ensemble_spec e;
    apply_ensemble(e, s);
    if (prof == "gaussian") {
        gp = {grid_with_spacing(1e-3, 12, 200), grid_with_spacing(1e-3, 12, 200)};
        c.resize(gp.kg->size());
        for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::pow(gp.kg->r[j], k) * std::exp(-0.5 * sq(gp.kg->r[j]));
    } else {
        gp = study_grids(60, e.rho_hi + 0.5, 60, e.rho_hi + 0.5, 1.0);
        auto g = member_rng(e.seed, 0);
        c = sample_bumps(random_bumps(g, e), *gp.kg, e);
    }
    cvec u = hankel_synthesize(c, k, n, gp.kg, gp.rg);
    cvec back = hankel_analyze(u, k, n, gp.rg, gp.kg);
    double num = 0, den = 0;
    for (std::size_t j = 0; j < gp.kg->size(); ++j) {
        double w = gp.kg->w[j] * std::pow(gp.kg->r[j], n - 1);
        num += w * std::norm(back[j] - c[j]);
        den += w * std::norm(c[j]);
    }
    outcome o;
    o.checks.push_back(make_check("transform", "round trip", std::sqrt(num / den), 0, 1e-6));
    double pos = channel_position_norms({{k, 0, u}}, 0, n, *gp.rg).l2;
    double frq = plancherel(n) * channel_sobolev_norm({{k, 0, c}}, 0, 0, n, *gp.kg);
    o.checks.push_back(make_check("transform", "plancherel", std::abs(pos - frq) / frq, 0, 1e-6));
    if (prof == "gaussian") {
        double en = 0, ed = 0;
        for (std::size_t i = 0; i < gp.rg->size(); ++i) {
            double r = gp.rg->r[i], w = gp.rg->w[i] * std::pow(r, n - 1);
            cplx want = plancherel(n) * ipow(-k) * std::pow(r, k) * std::exp(-0.5 * r * r);
            en += w * std::norm(u[i] - want);
            ed += w * std::norm(want);
        }
        o.checks.push_back(make_check("transform", "gaussian closed form", std::sqrt(en / ed), 0, 1e-6));
    }
    std::ostringstream os;
    os << "r,re,im\n";
    for (std::size_t i = 0; i < gp.rg->size(); ++i)
        os << fmt17(gp.rg->r[i]) << ',' << fmt17(u[i].real()) << ',' << fmt17(u[i].imag()) << '\n';
    o.profile = os.str();
    o.pass = true;
    for (auto& ch : o.checks) {
        o.summary["checks"].push_back(check_summary(ch));
        o.pass = o.pass && ch.pass;
    }
    o.summary["pass"] = o.pass;
    auto meta = [](const radial_grid& g) { return json{{"r_min", g.r.front()}, {"r_max", g.r.back()}, {"nodes", g.size()}}; };
    o.grid = {{"position", meta(*gp.rg)}, {"frequency", meta(*gp.kg)}};
    return o;
}

outcome run_verify(const settings& s) {
    const std::string& id = *s.target;
    if (id == "lemma" || id == "lemmaQk") return run_lemma(s);
    if (id == "strich3D" || id == "strichartz1") {
        wave_study_config c;
        c.n = static_cast<int>(s.n.value_or(id == "strich3D" ? 3 : 4));
        apply_ensemble(c.ens, s);
        if (s.T) c.T = *s.T;
        if (s.extra_s) c.extra_s = *s.extra_s;
        auto o = finish_studies({strichartz_free_study(c)});
        o.grid = study_grid_meta(c.data_radius, c.ens.rho_hi, c.refine_factor);
        return o;
    }
    if (id == "strichartz2") {
        inhom_study_config c;
        c.n = static_cast<int>(s.n.value_or(3));
        apply_ensemble(c.ens, s);
        if (s.T) c.T = *s.T;
        if (s.eps) c.eps = *s.eps;
        auto o = finish_studies({strichartz_inhom_study(c)});
        o.grid = study_grid_meta(c.data_radius, c.ens.rho_hi, c.refine_factor);
        return o;
    }
    if (id == "genineq2") {
        transfer_study_config c;
        c.n = static_cast<int>(s.n.value_or(3));
        apply_ensemble(c.ens, s);
        auto o = finish_studies({transfer_study(c)});
        o.grid = study_grid_meta(c.r_max, c.ens.rho_hi, c.refine_factor);
        return o;
    }
    if (dirac_ids.count(id)) {
        auto c = default_dirac_config();
        apply_ensemble(c.ens, s);
        if (s.T) c.T = *s.T;
        if (s.s) c.s = *s.s;
        auto V = dirac_potential(s);
        if (id == "freedirac" && V.active()) throw config_error("config: freedirac needs potential 'none'");
        auto all = dirac_studies(V, c);
        std::vector<ratio_study> keep;
        for (auto& x : all)
            if (id == "dirac" || x.id == id) keep.push_back(std::move(x));
        auto o = finish_studies(std::move(keep));
        o.grid = study_grid_meta(c.data_radius, c.ens.rho_hi, c.refine_factor);
        return o;
    }
    if (wave_ids.count(id)) {
        wave_potential_config c;
        apply_ensemble(c.ens, s);
        if (s.T) c.T = *s.T;
        if (s.eps) c.eps = *s.eps;
        auto W = wave_potential_profile(s.potential.value_or("none"), s.delta.value_or(0.05), c.eps, s.scale.value_or(1.0));
        auto all = wave_potential_study(W, c);
        std::vector<ratio_study> keep;
        for (auto& x : all)
            if (id == "wave" || x.id == id) keep.push_back(std::move(x));
        auto o = finish_studies(std::move(keep));
        o.grid = study_grid_meta(c.data_radius, c.ens.rho_hi, c.refine_factor);
        return o;
    }
    if (id == "prodest") {
        prodest_config c;
        if (s.seed) c.seed = static_cast<std::uint64_t>(*s.seed);
        if (s.count) c.count = static_cast<int>(*s.count);
        if (s.s) c.s = *s.s;
        auto o = finish_studies({prodest_study(c)});
        o.grid = {{"band", c.band}, {"band_refined", c.band_refined}};
        return o;
    }
    if (id == "equivalence") {
        outcome o;
        o.checks = equivalence_suite();
        o.pass = true;
        for (auto& ch : o.checks) {
            o.summary["checks"].push_back(check_summary(ch));
            o.pass = o.pass && ch.pass;
        }
        o.summary["pass"] = o.pass;
        o.grid = {{"recipe", "per-check grids"}};
        return o;
    }
    // nld
    auto c = nld_config(s, false);
    auto rep = nld_small_data_study(c);
    outcome o;
    o.summary = nld_summary(rep);
    o.trajectory = trajectory_csv(rep.diag);
    o.pass = rep.pass;
    o.grid = nld_grid_meta(c.grid, c.refine_factor);
    return o;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partial-wave Strichartz and Dirac toolkit"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    settings cli;
    std::string config_path;
    auto opt = [&](const char* name, auto& dst, const char* help) { app.add_option(name, dst, help); };
    opt("--config", config_path, "JSON run configuration");
    opt("--seed", cli.seed, "ensemble seed");
    opt("--workers", cli.workers, "worker threads");
    opt("--out", cli.out, "output directory");
    opt("--n", cli.n, "space dimension");
    opt("--count", cli.count, "ensemble size");
    opt("--kmax", cli.kmax, "largest degree (lemma)");
    opt("--k", cli.k, "channel degree (transform)");
    opt("--T", cli.T, "time horizon");
    opt("--dt", cli.dt, "time step (nld)");
    opt("--eps", cli.eps, "data size (nld) or weight exponent (wave)");
    opt("--s", cli.s, "angular regularity");
    opt("--extra-s", cli.extra_s, "extra angular regularity (free Strichartz)");
    opt("--potential", cli.potential, "none, bracket or gaussian");
    opt("--delta", cli.delta, "potential size");
    opt("--scale", cli.scale, "potential amplitude factor (may be negative)");
    opt("--cubic", cli.cubic, "none, mass_cubic or soler");
    opt("--profile", cli.profile, "gaussian or bumps (transform)");

    std::string sim_t, ver_t, tr_t, lem_t;
    auto* sim = app.add_subcommand("simulate", "run the nonlinear or linear Dirac flow");
    sim->add_option("target", sim_t, "nld or linear")->required();
    auto* ver = app.add_subcommand("verify", "run a ratio study or the identity suite");
    ver->add_option("target", ver_t, "study id")->required();
    auto* tr = app.add_subcommand("transform", "Hankel transform of a channel profile");
    tr->add_option("target", tr_t, "hankel")->required();
    auto* lem = app.add_subcommand("lemma", "tabulate the Q_k polynomials");
    lem->add_option("target", lem_t, "qk")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (sim->parsed()) cli.command = "simulate", cli.target = sim_t;
    if (ver->parsed()) cli.command = "verify", cli.target = ver_t;
    if (tr->parsed()) cli.command = "transform", cli.target = tr_t;
    if (lem->parsed()) cli.command = "lemma", cli.target = lem_t;

    settings s;
    outcome o;
    try {
        if (!config_path.empty()) s = load_config(config_path);
        overlay(s, cli);
        validate(s);
        // builds the potential once so a bad spec fails before any compute
        if (s.potential && *s.potential != "none") {
            if (wave_ids.count(*s.target))
                validate_wave_potential(wave_potential_profile(*s.potential, s.delta.value_or(0.05), s.eps.value_or(0.1),
                                                               s.scale.value_or(1.0)),
                                        *grid_with_spacing(1e-3, 40, 400));
            else
                validate_potential(dirac_potential(s), *grid_with_spacing(1e-3, 40, 400));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    set_workers(static_cast<int>(s.workers.value_or(1)));
    auto t0 = std::chrono::steady_clock::now();
    try {
        if (*s.command == "simulate") o = run_simulate(s);
        else if (*s.command == "verify") o = run_verify(s);
        else if (*s.command == "transform") o = run_transform(s);
        else o = run_lemma(s);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    try {
        std::filesystem::path out = s.out.value_or("pwave_out");
        std::filesystem::create_directories(out);
        if (!o.studies.empty()) write_file(out / "study.csv", study_csv(o.studies));
        if (!o.checks.empty()) write_file(out / "study.csv", checks_csv(o.checks));
        if (o.trajectory) write_file(out / "trajectory.csv", *o.trajectory);
        if (o.profile) write_file(out / "profile.csv", *o.profile);
        write_file(out / "summary.json", o.summary.dump(2) + "\n");
        json manifest = {{"tool", "pwave"},
                         {"version", PWAVE_VERSION},
                         {"config", echo(s)},
                         {"grid", o.grid},
                         {"workers", s.workers.value_or(1)},
                         {"elapsed_seconds", elapsed},
                         {"timestamp", utc_now()}};
        write_file(out / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << *s.command << ' ' << *s.target << ": " << (o.pass ? "pass" : "FAIL") << "\n";
    return o.pass ? 0 : 2;
}
