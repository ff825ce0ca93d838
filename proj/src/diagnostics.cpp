#include "tmf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tmf {

using std::numbers::pi;

std::vector<std::string> MonitorConfig::violations() const
{
    std::vector<std::string> out;
    auto pos = [&](const char* name, double x) {
        if (!(x > 0.0) || !std::isfinite(x)) out.push_back(std::string("monitor.") + name + ": must be positive");
    };
    pos("eps0", eps0);
    pos("eps1", eps1);
    pos("c0", c0);
    pos("C1", C1);
    pos("C2", C2);
    pos("c1", c1);
    pos("ell_bar", ell_bar);
    pos("E0", E0);
    if (!(delta > 0.0 && delta < 1.0)) out.push_back("monitor.delta: must lie in (0, 1)");
    return out;
}

std::string flag_name(const Flag& f)
{
    if (!f) return "n/a";
    return *f ? "true" : "false";
}

std::string regime_name(Regime r)
{
    switch (r) {
    case Regime::Bounded: return "bounded";
    case Regime::Stretching: return "stretching";
    default: return "indeterminate";
    }
}

Thm1Result thm1_monitor(const Record& r, const MonitorConfig& c)
{
    Thm1Result out;
    out.hyp_i = r.ell <= c.ell_bar;
    out.margin = r.L_leash * std::pow(r.ell, 0.25 * (1.0 + c.delta));
    if (r.tension_norm <= c.eps1) out.hyp_ii = out.margin >= c.c0;
    return out;
}

Thm2Result thm2_monitor(const Record& r, const MonitorConfig& c)
{
    Thm2Result out;
    double L = std::log(1.0 / r.ell);
    if (!(L > 1.0)) return out;
    out.ratio_bounded = r.L_leash / std::sqrt(L);
    out.ratio_stretching = r.L_leash / std::pow(L, 0.5 * (1.0 + c.delta));
    if (out.ratio_bounded <= c.C1)
        out.regime = Regime::Bounded;
    else if (out.ratio_stretching >= c.c0)
        out.regime = Regime::Stretching;
    return out;
}

PsiBoundsResult psi_bounds_check(const Record& r, const MonitorConfig& c, double tol)
{
    PsiBoundsResult out;
    double L = std::log(1.0 / r.ell);
    double l2 = r.ell * r.ell;
    out.ratio_upper = r.psi_mean / (l2 * (L + 1.0));
    out.ratio_lower = L > 0.0 ? r.psi_mean / (l2 * std::pow(L, 1.0 + c.delta)) : 0.0;
    if (r.tension_norm > tol) return out;
    auto regime = thm2_monitor(r, c).regime;
    if (regime == Regime::Bounded || r.L_leash == 0.0) out.upper_ok = out.ratio_upper <= c.C2;
    if (regime == Regime::Stretching) out.lower_ok = out.ratio_lower >= c.c1;
    return out;
}

std::string ChainResult::first_violation() const
{
    if (!applicable) return {};
    if (!ell_ok) return "ell above 5 pi^2 / vbar^2";
    if (!central_ok) return "central w-energy below 2 pi";
    if (!min_v_ok) return "min v on |s| <= 8 below vbar + 1";
    if (!area_ok) return "area of w below 2 pi";
    if (!disjoint_ok) return "disjointness";
    if (!v_max_ok) return "v_max below the leash rate";
    return {};
}

ChainResult collar_chain(const Record& r, const TargetGeometry& tg, const MonitorConfig& c)
{
    ChainResult out;
    const auto& wp = tg.warping.params();
    if (r.ell <= 0.0 || r.X < 8.0) return out;
    out.applicable = true;
    out.ell_ok = r.ell <= 5.0 * pi * pi / (wp.vbar * wp.vbar);
    out.central_ok = r.central_w >= 2.0 * pi;
    out.min_v_ok = r.min_v_central >= wp.vbar + 1.0;
    out.area_ok = r.area_w >= 2.0 * pi * (1.0 - 1e-9);
    out.disjoint_ok = r.disjoint;
    out.v_max_ratio = wp.kind == WarpKind::Exp ? r.v_max / std::log(1.0 / r.ell)
                                               : r.v_max * std::pow(r.ell, 0.25 * (1.0 + c.delta));
    out.v_max_ok = out.v_max_ratio >= 0.5 * c.c0;
    return out;
}

RegionCheck region_check(const RegionSets& rs)
{
    RegionCheck out;
    out.count_ok = rs.count_ok;
    out.length_ok = rs.length_ok;
    double C = 8.0 * (rs.E_total / rs.eps0 + 2.0);
    out.rho_ok = rs.max_rho_ratio <= C;
    return out;
}

void MonitorSummary::add(const Record& r, const TargetGeometry& tg, const MonitorConfig& c, double tol)
{
    auto t1 = thm1_monitor(r, c);
    auto t2 = thm2_monitor(r, c);
    auto l31 = psi_bounds_check(r, c, tol);
    auto ch = collar_chain(r, tg, c);
    if (records == 0) {
        min_thm1_margin = t1.margin;
        max_ratio_upper = l31.ratio_upper;
        min_ratio_lower = l31.ratio_lower;
        min_v_max_ratio = ch.v_max_ratio;
    }
    ++records;
    thm1_i_true += t1.hyp_i;
    if (!t1.hyp_ii) ++thm1_ii_na;
    else if (*t1.hyp_ii) ++thm1_ii_true;
    else ++thm1_ii_false;
    min_thm1_margin = std::min(min_thm1_margin, t1.margin);
    switch (t2.regime) {
    case Regime::Bounded: ++bounded; break;
    case Regime::Stretching: ++stretching; break;
    default: ++indeterminate;
    }
    if (l31.upper_ok && !*l31.upper_ok) ++psi_upper_false;
    if (l31.lower_ok && !*l31.lower_ok) ++psi_lower_false;
    max_ratio_upper = std::max(max_ratio_upper, l31.ratio_upper);
    min_ratio_lower = std::min(min_ratio_lower, l31.ratio_lower);
    if (ch.applicable) {
        if (chain_applicable == 0) min_v_max_ratio = ch.v_max_ratio;
        ++chain_applicable;
        min_v_max_ratio = std::min(min_v_max_ratio, ch.v_max_ratio);
        if (!ch.ok()) {
            if (chain_violations == 0) first_chain_violation = ch.first_violation();
            ++chain_violations;
        }
    }
    if (r.L_leash < 2.0 * r.v_max * (1.0 - 1e-12)) ++leash_violations;
}

void MonitorSummary::finish(const std::vector<Record>& series, const MonitorConfig& c)
{
    degeneration_threshold.reset();
    for (std::size_t i = series.size(); i-- > 0;) {
        auto t1 = thm1_monitor(series[i], c);
        if (t1.hyp_ii && !*t1.hyp_ii) break;
        if (t1.hyp_ii) degeneration_threshold = series[i].ell;
    }
}

}  // namespace tmf
