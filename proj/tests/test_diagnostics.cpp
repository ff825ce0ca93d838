#include <doctest.h>

#include "tmf/diagnostics.hpp"

#include <cmath>
#include <numbers>

using namespace tmf;
using std::numbers::pi;

namespace {

Record rec(double ell, double L, double tension)
{
    Record r;
    r.ell = ell;
    r.X = collar_width(ell, CollarVariant::Cylinder);
    r.L_leash = L;
    r.tension_norm = tension;
    return r;
}

}  // namespace

TEST_CASE("hypothesis monitor")
{
    MonitorConfig c;
    auto a = thm1_monitor(rec(c.ell_bar / 2, 5.0, 2 * c.eps1), c);
    CHECK(a.hyp_i);
    CHECK_FALSE(a.hyp_ii.has_value());
    CHECK(flag_name(a.hyp_ii) == "n/a");

    double ell = 1e-3;
    auto b = thm1_monitor(rec(ell, 2 * c.c0 * std::pow(ell, -(1 + c.delta) / 4), 1e-3), c);
    REQUIRE(b.hyp_ii.has_value());
    CHECK(*b.hyp_ii);
    CHECK(b.margin == doctest::Approx(2 * c.c0));
    CHECK_FALSE(thm1_monitor(rec(2 * c.ell_bar, 0.0, 0.0), c).hyp_i);
    CHECK(flag_name(thm1_monitor(rec(ell, 0.0, 0.0), c).hyp_ii) == "false");
}

TEST_CASE("regime monitor")
{
    MonitorConfig c;
    CHECK(thm2_monitor(rec(0.01, 0.0, 0.0), c).regime == Regime::Bounded);
    CHECK(thm2_monitor(rec(0.5, 1000.0, 0.0), c).regime == Regime::Indeterminate);
    double ell = 1e-4, L = std::log(1 / ell);
    auto s = thm2_monitor(rec(ell, 2 * c.C1 * std::sqrt(L), 0.0), c);
    CHECK(s.regime == Regime::Stretching);
    CHECK(s.ratio_bounded == doctest::Approx(2 * c.C1));
    CHECK(s.ratio_stretching == doctest::Approx(2 * c.C1 * std::pow(L, 0.5 - 0.5 * (1 + c.delta))));
    MonitorConfig strict = c;
    strict.c0 = 1e3;
    CHECK(thm2_monitor(rec(ell, 2 * c.C1 * std::sqrt(L), 0.0), strict).regime == Regime::Indeterminate);
    CHECK(regime_name(Regime::Stretching) == "stretching");
}

TEST_CASE("psi ratio bounds")
{
    MonitorConfig c;
    auto r = rec(0.01, 0.0, 1e-9);
    r.psi_mean = 0.0;
    auto a = psi_bounds_check(r, c, 1e-7);
    REQUIRE(a.upper_ok.has_value());
    CHECK(*a.upper_ok);
    CHECK_FALSE(a.lower_ok.has_value());

    r.tension_norm = 1.0;
    auto b = psi_bounds_check(r, c, 1e-7);
    CHECK_FALSE(b.upper_ok.has_value());
    CHECK_FALSE(b.lower_ok.has_value());

    double ell = 1e-3, L = std::log(1 / ell);
    auto s = rec(ell, 100 * std::sqrt(L), 0.0);
    s.psi_mean = 2 * c.c1 * ell * ell * std::pow(L, 1 + c.delta);
    auto d = psi_bounds_check(s, c, 1e-7);
    REQUIRE(d.lower_ok.has_value());
    CHECK(*d.lower_ok);
    CHECK(d.ratio_lower == doctest::Approx(2 * c.c1));
    CHECK(d.ratio_upper == doctest::Approx(s.psi_mean / (ell * ell * (L + 1))));
}

TEST_CASE("collar chain")
{
    TargetGeometry tg(1e6, WarpParams{});
    MonitorConfig c;
    auto r = rec(1e-3, 200.0, 1.0);
    r.central_w = 8 * pi;
    r.min_v_central = 40.0;
    r.area_w = 4 * pi;
    r.v_max = 60.0;
    auto ch = collar_chain(r, tg, c);
    CHECK(ch.applicable);
    CHECK(ch.ok());
    CHECK(ch.v_max_ratio == doctest::Approx(60.0 * std::pow(1e-3, 0.375)));
    r.min_v_central = 10.5;
    CHECK(collar_chain(r, tg, c).first_violation() == "min v on |s| <= 8 below vbar + 1");
    auto far = rec(1.5, 0.0, 0.0);
    CHECK(far.X < 8.0);
    auto na = collar_chain(far, tg, c);
    CHECK_FALSE(na.applicable);
    CHECK(na.ok());
}

TEST_CASE("monitor config and aggregates")
{
    MonitorConfig c;
    CHECK(c.violations().empty());
    c.delta = 1.0;
    c.eps1 = -1.0;
    CHECK(c.violations().size() == 2);

    MonitorConfig d;
    TargetGeometry tg(1e6, WarpParams{});
    std::vector<Record> s;
    for (double ell : {0.8, 1e-2, 1e-3}) {
        auto r = rec(ell, 3.0, 1.0);
        r.v_max = 1.0;
        s.push_back(r);
    }
    s[0].tension_norm = 100.0;
    MonitorSummary m;
    for (auto& r : s) m.add(r, tg, d, 1e-7);
    m.finish(s, d);
    CHECK(m.records == 3);
    CHECK(m.thm1_i_true == 2);
    CHECK(m.thm1_ii_na == 1);
    CHECK(m.leash_violations == 0);
    // 3 ell^0.375 >= 1 only for ell >= 3^(-1/0.375) ~ 0.053
    CHECK(m.thm1_ii_false == 2);
    CHECK_FALSE(m.degeneration_threshold.has_value());
}

TEST_CASE("region decomposition structure")
{
    WarpParams wp;
    wp.kind = WarpKind::Flat;
    TargetGeometry tg(1e6, wp);
    SymmetricMap u(512, 16.0, 1.2);
    std::fill(u.z.begin(), u.z.end(), 1.2);
    auto fr = make_frame(u, 0.05);
    auto rs = region_sets(u, fr, tg, 0.05);
    CHECK(region_check(rs).ok());
}
