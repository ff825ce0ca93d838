#include "tmf/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

namespace tmf {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt(double x)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s)
{
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto res = std::from_chars(first, s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

template <class I>
bool parse_int(const std::string& s, I& out)
{
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

struct Key {
    std::string name;
    std::function<std::string(const RunConfig&)> get;
    std::function<std::string(RunConfig&, const std::string&)> set;  // "" on success, else expected type
};

Key real(const std::string& name, double RunConfig::*sec)
{
    return {name, [sec](const RunConfig& c) { return fmt(c.*sec); },
            [sec](RunConfig& c, const std::string& v) { return parse_double(v, c.*sec) ? "" : "a number"; }};
}

template <class S>
Key real(const std::string& name, S RunConfig::*sec, double S::*field)
{
    return {name, [=](const RunConfig& c) { return fmt(c.*sec.*field); },
            [=](RunConfig& c, const std::string& v) { return parse_double(v, c.*sec.*field) ? "" : "a number"; }};
}

template <class S, class I>
Key integer(const std::string& name, S RunConfig::*sec, I S::*field)
{
    return {name, [=](const RunConfig& c) { return std::to_string(c.*sec.*field); },
            [=](RunConfig& c, const std::string& v) { return parse_int(v, c.*sec.*field) ? "" : "an integer"; }};
}

const std::vector<Key>& keys()
{
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back({"mode", [](const RunConfig& c) { return std::string(c.flow.mode == FlowMode::Full ? "full" : "rescaled"); },
                     [](RunConfig& c, const std::string& v) -> std::string {
                         if (v == "full") c.flow.mode = FlowMode::Full;
                         else if (v == "rescaled") c.flow.mode = FlowMode::Rescaled;
                         else return "one of full, rescaled";
                         return "";
                     }});
        k.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                     [](RunConfig& c, const std::string& v) { return parse_int(v, c.seed) ? "" : "an unsigned integer"; }});
        k.push_back(real("target.C_N", &RunConfig::C_N));
        k.push_back({"target.warping",
                     [](const RunConfig& c) {
                         switch (c.warp.kind) {
                         case WarpKind::Poly: return std::string("poly");
                         case WarpKind::Exp: return std::string("exp");
                         default: return std::string("flat");
                         }
                     },
                     [](RunConfig& c, const std::string& v) -> std::string {
                         if (v == "poly") c.warp.kind = WarpKind::Poly;
                         else if (v == "exp") c.warp.kind = WarpKind::Exp;
                         else if (v == "flat") c.warp.kind = WarpKind::Flat;
                         else return "one of poly, exp, flat";
                         return "";
                     }});
        k.push_back(real("target.delta", &RunConfig::warp, &WarpParams::delta));
        k.push_back(real("target.alpha", &RunConfig::warp, &WarpParams::alpha));
        k.push_back(real("target.c3", &RunConfig::warp, &WarpParams::c3));
        k.push_back(real("target.Lambda", &RunConfig::warp, &WarpParams::Lambda));
        k.push_back(real("target.vbar", &RunConfig::warp, &WarpParams::vbar));
        k.push_back(real("target.flat_value", &RunConfig::warp, &WarpParams::flat_value));
        k.push_back(real("flow.eta", &RunConfig::flow, &FlowParams::eta));
        k.push_back(real("flow.d", &RunConfig::flow, &FlowParams::d));
        k.push_back(real("flow.dt_init", &RunConfig::flow, &FlowParams::dt_init));
        k.push_back(real("flow.dt_min", &RunConfig::flow, &FlowParams::dt_min));
        k.push_back(real("flow.dt_max", &RunConfig::flow, &FlowParams::dt_max));
        k.push_back(real("flow.safety", &RunConfig::flow, &FlowParams::safety));
        k.push_back(real("flow.balance_tol", &RunConfig::flow, &FlowParams::balance_tol));
        k.push_back(real("flow.energy_tol", &RunConfig::flow, &FlowParams::energy_tol));
        k.push_back(real("flow.dlogl_max", &RunConfig::flow, &FlowParams::dlogl_max));
        k.push_back(real("flow.tol_inner", &RunConfig::flow, &FlowParams::tol_inner));
        k.push_back(integer("flow.inner_max_iter", &RunConfig::flow, &FlowParams::inner_max_iter));
        k.push_back(real("flow.ell_stop", &RunConfig::flow, &FlowParams::ell_stop));
        k.push_back(real("flow.t_max", &RunConfig::flow, &FlowParams::t_max));
        k.push_back(integer("flow.max_steps", &RunConfig::flow, &FlowParams::max_steps));
        k.push_back(integer("grid.n", &RunConfig::initial, &InitialDataSpec::n));
        k.push_back(real("grid.sigma", &RunConfig::initial, &InitialDataSpec::sigma));
        k.push_back(real("initial.eps", &RunConfig::initial, &InitialDataSpec::eps));
        k.push_back(real("initial.z0", &RunConfig::initial, &InitialDataSpec::z0));
        k.push_back(real("initial.ell0", &RunConfig::initial, &InitialDataSpec::ell0));
        k.push_back(real("initial.ell_bar", &RunConfig::initial, &InitialDataSpec::ell_bar));
        k.push_back(real("initial.slack", &RunConfig::initial, &InitialDataSpec::slack));
        k.push_back(real("initial.ramp_tau", &RunConfig::initial, &InitialDataSpec::ramp_tau));
        k.push_back({"initial.import", [](const RunConfig& c) { return c.import_path; },
                     [](RunConfig& c, const std::string& v) { c.import_path = v; return std::string(); }});
        k.push_back(real("monitor.eps0", &RunConfig::monitor, &MonitorConfig::eps0));
        k.push_back(real("monitor.eps1", &RunConfig::monitor, &MonitorConfig::eps1));
        k.push_back(real("monitor.c0", &RunConfig::monitor, &MonitorConfig::c0));
        k.push_back(real("monitor.C1", &RunConfig::monitor, &MonitorConfig::C1));
        k.push_back(real("monitor.C2", &RunConfig::monitor, &MonitorConfig::C2));
        k.push_back(real("monitor.c1", &RunConfig::monitor, &MonitorConfig::c1));
        k.push_back(real("monitor.delta", &RunConfig::monitor, &MonitorConfig::delta));
        k.push_back(real("monitor.ell_bar", &RunConfig::monitor, &MonitorConfig::ell_bar));
        k.push_back(real("monitor.E0", &RunConfig::monitor, &MonitorConfig::E0));
        k.push_back({"output.dir", [](const RunConfig& c) { return c.out_dir; },
                     [](RunConfig& c, const std::string& v) { c.out_dir = v; return std::string(); }});
        k.push_back({"output.snapshot_every", [](const RunConfig& c) { return std::to_string(c.snapshot_every); },
                     [](RunConfig& c, const std::string& v) {
                         return parse_int(v, c.snapshot_every) ? std::string() : std::string("an integer");
                     }});
        return k;
    }();
    return table;
}

const Key* find_key(const std::string& name)
{
    for (auto& k : keys())
        if (k.name == name) return &k;
    return nullptr;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + p.string());
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

ParseResult parse_config(const std::string& text, const RunConfig& base)
{
    ParseResult res;
    res.config = base;
    std::map<std::string, int> line_of;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            res.errors.push_back("line " + std::to_string(line) + ": expected `section.key = value`");
            continue;
        }
        std::string name = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
        const Key* k = find_key(name);
        if (!k) {
            res.errors.push_back("line " + std::to_string(line) + ": unknown key '" + name + "'");
            continue;
        }
        if (name == "target.warping") {
            auto before = res.config.warp.kind;
            auto err = k->set(res.config, value);
            if (!err.empty()) {
                res.errors.push_back("line " + std::to_string(line) + ": " + name + ": expected " + err + ", got '" +
                                     value + "'");
                continue;
            }
            auto kind = res.config.warp.kind;
            if (kind != before) {
                // per-family defaults unless set explicitly in this text
                WarpParams d;
                if (kind == WarpKind::Exp) { d.c3 = 0.015; d.Lambda = 60.0; }
                if (!line_of.count("target.c3")) res.config.warp.c3 = d.c3;
                if (!line_of.count("target.Lambda")) res.config.warp.Lambda = d.Lambda;
            }
            line_of[name] = line;
            continue;
        }
        auto err = k->set(res.config, value);
        if (!err.empty()) {
            res.errors.push_back("line " + std::to_string(line) + ": " + name + ": expected " + err + ", got '" +
                                 value + "'");
            continue;
        }
        line_of[name] = line;
    }
    for (auto& v : validate(res.config)) {
        auto key = v.substr(0, v.find(':'));
        auto it = line_of.find(key);
        res.errors.push_back(it != line_of.end() ? "line " + std::to_string(it->second) + ": " + v : v);
    }
    auto line_no = [](const std::string& e) { return e.rfind("line ", 0) == 0 ? std::atoi(e.c_str() + 5) : 1 << 30; };
    std::stable_sort(res.errors.begin(), res.errors.end(),
                     [&](const std::string& a, const std::string& b) { return line_no(a) < line_no(b); });
    return res;
}

ParseResult load_config(const fs::path& path)
{
    ParseResult res;
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        res.errors.push_back(e.what());
        return res;
    }
    return parse_config(text);
}

std::string serialize_config(const RunConfig& c)
{
    std::string out;
    for (auto& k : keys()) out += k.name + " = " + k.get(c) + "\n";
    return out;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize_config(a) == serialize_config(b); }

std::vector<std::string> validate(const RunConfig& c)
{
    std::vector<std::string> out;
    auto need = [&](bool ok, const std::string& key, const std::string& what) {
        if (!ok) out.push_back(key + ": " + what);
    };
    auto positive = [&](double x, const std::string& key) { need(x > 0.0, key, "must be positive"); };
    const auto& f = c.flow;
    positive(c.C_N, "target.C_N");
    need(c.C_N > 1.0, "target.C_N", "must exceed 1");
    need(c.warp.delta > 0.0 && c.warp.delta < 1.0, "target.delta", "must lie in (0, 1)");
    positive(c.warp.alpha, "target.alpha");
    positive(c.warp.c3, "target.c3");
    positive(c.warp.Lambda, "target.Lambda");
    need(c.warp.vbar >= 0.0, "target.vbar", "must be non-negative");
    positive(c.warp.flat_value, "target.flat_value");
    positive(f.eta, "flow.eta");
    positive(f.d, "flow.d");
    positive(f.dt_init, "flow.dt_init");
    positive(f.dt_min, "flow.dt_min");
    positive(f.dt_max, "flow.dt_max");
    need(f.dt_min <= f.dt_init && f.dt_init <= f.dt_max, "flow.dt_init", "must lie in [flow.dt_min, flow.dt_max]");
    need(f.safety > 0.0 && f.safety <= 1.0, "flow.safety", "must lie in (0, 1]");
    positive(f.balance_tol, "flow.balance_tol");
    need(f.energy_tol >= 0.0, "flow.energy_tol", "must be non-negative");
    need(f.dlogl_max > 0.0 && f.dlogl_max < 1.0, "flow.dlogl_max", "must lie in (0, 1)");
    positive(f.tol_inner, "flow.tol_inner");
    need(f.inner_max_iter >= 1, "flow.inner_max_iter", "must be at least 1");
    positive(f.ell_stop, "flow.ell_stop");
    need(f.t_max >= 0.0, "flow.t_max", "must be non-negative");
    need(f.max_steps >= 1, "flow.max_steps", "must be at least 1");
    need(c.initial.n >= 16 && c.initial.n % 2 == 0, "grid.n", "must be even and at least 16");
    positive(c.initial.sigma, "grid.sigma");
    need(c.initial.sigma < c.initial.n / 2, "grid.sigma", "must be below n / 2");
    need(c.initial.eps > 0.0 && c.initial.eps < 0.25, "initial.eps", "must lie in (0, 1/4)");
    need(c.initial.z0 > 1.0, "initial.z0", "must exceed 1");
    need(c.initial.ell0 >= 0.0, "initial.ell0", "must be non-negative (0 selects it from the energy budget)");
    positive(c.initial.ell_bar, "initial.ell_bar");
    need(c.initial.slack >= 0.0, "initial.slack", "must be non-negative");
    need(c.initial.ramp_tau > 0.0 && c.initial.ramp_tau <= 1.0, "initial.ramp_tau", "must lie in (0, 1]");
    need(c.import_path.empty() || c.initial.ell0 > 0.0, "initial.ell0", "must be set when initial.import is used");
    need(c.warp.kind != WarpKind::Flat || c.import_path.size() || c.initial.ell0 > 0.0, "initial.ell0",
         "must be set for a flat target");
    for (auto& v : c.monitor.violations()) out.push_back(v);
    need(!c.out_dir.empty(), "output.dir", "must not be empty");
    need(c.snapshot_every >= 0, "output.snapshot_every", "must be non-negative");
    if (out.empty()) {
        try {
            TargetGeometry tg(c.C_N, c.warp);
        } catch (const DomainError& e) {
            out.push_back(std::string("target.warping: ") + e.what());
        }
    }
    return out;
}

std::vector<SweepRun> parse_sweep(const std::string& text)
{
    std::vector<SweepRun> runs;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.size() >= 5 && s.front() == '[' && s.back() == ']' && s.compare(1, 3, "run") == 0) {
            SweepRun r;
            r.name = trim(s.substr(4, s.size() - 5));
            if (r.name.empty()) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "run_%03zu", runs.size());
                r.name = buf;
            }
            r.first_line = line + 1;
            runs.push_back(r);
            continue;
        }
        if (runs.empty()) {
            auto t = trim(s.substr(0, s.find('#')));
            if (!t.empty()) throw std::runtime_error("sweep line " + std::to_string(line) + ": override before any [run] header");
            continue;
        }
        runs.back().overrides += raw + "\n";
    }
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (runs[i].name == runs[j].name) throw std::runtime_error("sweep: duplicate run name '" + runs[i].name + "'");
    return runs;
}

RunOutput simulate(const RunConfig& cfg, const RecordSink& sink)
{
    TargetGeometry tg(cfg.C_N, cfg.warp);
    InitialDataSpec spec = cfg.initial;
    spec.d = cfg.flow.d;
    RunOutput out;
    if (!cfg.import_path.empty()) {
        out.initial.map = read_snapshot(cfg.import_path, spec.n, spec.sigma);
        out.initial.ell0 = spec.ell0;
        out.initial.budget = certify_budget(out.initial.map, spec.ell0, tg, spec);
    } else {
        out.initial = build_initial(spec, tg);
    }
    FlowState st{out.initial.map, out.initial.ell0, 0.0};
    out.run = run_flow(st, cfg.flow, tg, sink);
    for (auto& r : out.run.series) out.monitors.add(r, tg, cfg.monitor, cfg.flow.tol_inner);
    out.monitors.finish(out.run.series, cfg.monitor);
    return out;
}

std::string series_header()
{
    return "t,ell,E,psi_mean,psi_std,b0,L_leash,v_max,tension_norm,dE_dt_fd,dE_dt_model,thm1_i,thm1_ii,thm2_regime";
}

std::string series_row(const Record& r, const MonitorConfig& mc)
{
    auto t1 = thm1_monitor(r, mc);
    auto t2 = thm2_monitor(r, mc);
    std::string s;
    for (double x : {r.t, r.ell, r.E, r.psi_mean, r.psi_std, r.b0, r.L_leash, r.v_max, r.tension_norm, r.dE_dt_fd,
                     r.dE_dt_model})
        s += fmt(x) + ",";
    s += std::string(t1.hyp_i ? "true" : "false") + "," + flag_name(t1.hyp_ii) + "," + regime_name(t2.regime);
    return s;
}

void write_snapshot(const fs::path& file, const FlowState& st, const FlowParams& p, const TargetGeometry& tg)
{
    const auto& u = st.map;
    auto fr = make_frame(u, st.ell, p.d);
    auto hp = hopf(u, fr, tg);
    auto th = angular_energy(u, tg);
    const int m = u.m();
    std::string out = "xi,s,v,r,z,psi,theta\n";
    auto row = [&](int j, double sign) {
        out += fmt(sign * double(j) / m) + "," + fmt(sign * fr.mesh.s[j]) + "," + fmt(u.v_abs(j)) + "," + fmt(u.r[j]) +
               "," + fmt(sign * u.z[j]) + "," + fmt(hp.psi_node[j]) + "," + fmt(th[j]) + "\n";
    };
    for (int j = m; j >= 1; --j) row(j, -1.0);
    for (int j = 0; j <= m; ++j) row(j, 1.0);
    write_file(file, out);
}

SymmetricMap read_snapshot(const fs::path& file, int n, double sigma)
{
    std::istringstream in(read_file(file));
    std::string line;
    if (!std::getline(in, line) || trim(line).rfind("xi,s,v,r,z", 0) != 0)
        throw std::runtime_error(file.string() + ": not a snapshot table");
    std::vector<std::array<double, 5>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::array<double, 5> a{};
        std::istringstream ls(line);
        std::string cell;
        for (int k = 0; k < 5; ++k) {
            if (!std::getline(ls, cell, ',') || !parse_double(trim(cell), a[k]))
                throw std::runtime_error(file.string() + ": bad value at line " + std::to_string(lineno));
        }
        if (a[0] >= 0.0) rows.push_back(a);
    }
    if (int(rows.size()) != n / 2 + 1)
        throw std::runtime_error(file.string() + ": expected " + std::to_string(n + 1) + " nodes for grid.n = " +
                                 std::to_string(n));
    SymmetricMap u(n, sigma, rows.back()[4]);
    for (int j = 0; j <= n / 2; ++j) {
        u.v[j] = rows[j][2];
        u.r[j] = rows[j][3];
        u.z[j] = rows[j][4];
    }
    u.r0 = rows.back()[3];
    u.enforce_boundary();
    u.check_finite();
    return u;
}

namespace {

json fit_json(const FitResult& f)
{
    json j;
    j["available"] = f.available;
    j["note"] = f.note;
    j["delta_fit"] = num(f.delta_fit);
    j["log_rate_exponent"] = num(f.log_rate_exponent);
    j["prefactor"] = num(f.prefactor);
    j["blowup_time_estimate"] = f.blowup_time_estimate ? num(*f.blowup_time_estimate) : json(nullptr);
    j["ell_span"] = num(f.ell_span);
    j["points"] = f.points;
    return j;
}

json summary_json(const RunConfig& cfg, const RunOutput& o)
{
    json j;
    j["schema_version"] = kSummarySchemaVersion;
    j["mode"] = cfg.flow.mode == FlowMode::Full ? "full" : "rescaled";
    const auto& s = o.run.series;
    json term;
    term["cause"] = o.run.cause;
    term["records"] = s.size();
    term["rejected_steps"] = o.run.rejected_steps;
    term["t_final"] = num(o.run.final_state.t);
    term["ell_final"] = num(o.run.final_state.ell);
    term["E_initial"] = s.empty() ? json(nullptr) : num(s.front().E);
    term["E_final"] = s.empty() ? json(nullptr) : num(s.back().E);
    j["termination"] = term;

    const auto& b = o.initial.budget;
    json init;
    init["ell0"] = num(o.initial.ell0);
    init["v_star"] = num(o.initial.v_star);
    init["Lambda1"] = num(o.initial.Lambda1);
    init["Lambda2"] = num(o.initial.Lambda2);
    init["energy"] = num(b.total);
    init["bound"] = num(b.bound);
    init["budget_ok"] = b.ok;
    init["sphere_energy"] = num(b.sphere_energy);
    init["sphere_rel_err"] = num(b.sphere_rel_err);
    init["min_norm_w"] = num(b.min_norm_w);
    json pieces = json::array();
    for (auto& p : b.pieces)
        pieces.push_back({{"name", p.name}, {"s_lo", num(p.s_lo)}, {"s_hi", num(p.s_hi)}, {"energy", num(p.energy)},
                          {"budget", num(p.budget)}, {"ok", p.ok}});
    init["pieces"] = pieces;
    j["initial"] = init;

    j["fit"] = fit_json(o.run.fit);

    const auto& m = o.monitors;
    json mon;
    mon["records"] = m.records;
    mon["thm1_i_true"] = m.thm1_i_true;
    mon["thm1_ii"] = {{"true", m.thm1_ii_true}, {"false", m.thm1_ii_false}, {"n/a", m.thm1_ii_na}};
    mon["thm1_min_margin"] = num(m.min_thm1_margin);
    mon["observed_degeneration_threshold"] = m.degeneration_threshold ? num(*m.degeneration_threshold) : json(nullptr);
    mon["thm2_regime"] = {{"bounded", m.bounded}, {"stretching", m.stretching}, {"indeterminate", m.indeterminate}};
    mon["psi_bounds"] = {{"upper_false", m.psi_upper_false},
                      {"lower_false", m.psi_lower_false},
                      {"max_ratio_upper", num(m.max_ratio_upper)},
                      {"min_ratio_lower", num(m.min_ratio_lower)}};
    mon["chain"] = {{"applicable", m.chain_applicable},
                    {"violations", m.chain_violations},
                    {"first_violation", m.first_chain_violation},
                    {"min_v_max_ratio", num(m.min_v_max_ratio)}};
    mon["leash_violations"] = m.leash_violations;
    j["monitors"] = mon;

    json conf;
    for (auto& k : keys()) conf[k.name] = k.get(cfg);
    j["config"] = conf;
    return j;
}

}  // namespace

RunOutput execute_to(const RunConfig& cfg, const fs::path& dir)
{
    fs::create_directories(dir);
    TargetGeometry tg(cfg.C_N, cfg.warp);
    long count = 0;
    RecordSink sink;
    if (cfg.snapshot_every > 0) {
        sink = [&](const FlowState& st, const Record& r) {
            if (count++ % cfg.snapshot_every) return;
            char name[64];
            std::snprintf(name, sizeof name, "snapshot_%06ld.csv", r.step);
            write_snapshot(dir / name, st, cfg.flow, tg);
        };
    }
    auto out = simulate(cfg, sink);
    if (cfg.snapshot_every > 0) write_snapshot(dir / "snapshot_final.csv", out.run.final_state, cfg.flow, tg);

    std::string csv = series_header() + "\n";
    for (auto& r : out.run.series) csv += series_row(r, cfg.monitor) + "\n";
    write_file(dir / "series.csv", csv);
    write_file(dir / "summary.json", summary_json(cfg, out).dump(2) + "\n");
    return out;
}

void write_error_json(const fs::path& dir, const std::string& kind, const std::string& message,
                      const std::vector<std::string>& details)
{
    json j;
    j["schema_version"] = kSummarySchemaVersion;
    j["error"] = {{"kind", kind}, {"message", message}, {"details", details}};
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream(dir / "error.json") << j.dump(2) << "\n";
}

int execute(const RunConfig& cfg, const fs::path& dir)
{
    try {
        execute_to(cfg, dir);
        return 0;
    } catch (const DomainError& e) {
        write_error_json(dir, "domain", e.what());
    } catch (const NumericError& e) {
        write_error_json(dir, "numeric", e.what());
    } catch (const std::exception& e) {
        write_error_json(dir, "io", e.what());
    }
    return 3;
}

int execute_sweep(const RunConfig& base, const std::vector<SweepRun>& runs, const fs::path& dir, unsigned jobs)
{
    std::vector<RunConfig> cfgs(runs.size());
    std::vector<std::string> errors;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        auto pr = parse_config(runs[i].overrides, base);
        for (auto& e : pr.errors) errors.push_back("run '" + runs[i].name + "': " + e);
        cfgs[i] = pr.config;
    }
    if (!errors.empty()) {
        write_error_json(dir, "config", "invalid sweep overrides", errors);
        return 2;
    }
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, unsigned(runs.size()));
    std::atomic<std::size_t> next{0};
    std::vector<int> status(runs.size(), 0);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < runs.size();) status[i] = execute(cfgs[i], dir / runs[i].name);
        });
    for (auto& t : pool) t.join();
    int worst = 0;
    for (int s : status) worst = std::max(worst, s);
    return worst;
}

}  // namespace tmf
