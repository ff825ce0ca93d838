#include <doctest.h>

#include "tmf/target.hpp"

#include <cmath>
#include <numbers>

using namespace tmf;
using std::numbers::pi;

namespace {

// brute-force scan of r^2 P(r) on a 1e-6 grid, refined by the vertex of the local parabola
ExtremalRadii scan_radii(double C)
{
    BumpMetric b{C};
    const int N = 1000000;
    auto F = [&](double r) { return r * r * b.factor(r); };
    ExtremalRadii out;
    bool have_max = false;
    double f0 = F(0.0), f1 = F(1.0 / N);
    for (int i = 1; i < N - 1; ++i) {
        double f2 = F(double(i + 1) / N);
        bool is_max = f1 > f0 && f1 >= f2, is_min = f1 < f0 && f1 <= f2;
        if (is_max || is_min) {
            double h = 1.0 / N, r = double(i) / N;
            double vertex = r + 0.5 * h * (f0 - f2) / (f0 - 2 * f1 + f2);
            if (is_max && !have_max) { out.r_max = vertex; have_max = true; }
            if (is_min && have_max) out.r_min = vertex;
        }
        f0 = f1;
        f1 = f2;
    }
    return out;
}

}  // namespace

TEST_CASE("bump factor")
{
    BumpMetric b{1e6};
    CHECK(bump_factor(b, 0.0) == doctest::Approx(1e6 + 1));
    CHECK(bump_factor(b, 1.0) == 1.0);
    CHECK(bump_factor(b, 2.0) == 1.0);
    // all one-sided derivatives vanish at the unit sphere
    for (int order = 1; order <= 3; ++order) {
        double h = 1e-3, in = 0.0;
        for (int k = 0; k <= order; ++k)
            in += ((order - k) % 2 ? -1.0 : 1.0) * std::tgamma(order + 1) / (std::tgamma(k + 1) * std::tgamma(order - k + 1)) *
                  b.factor(1.0 - k * h);
        CHECK(std::abs(in / std::pow(h, order)) < 1e-6);
    }
}

TEST_CASE("extremal radii")
{
    auto r = extremal_radii(1e6);
    auto s = scan_radii(1e6);
    CHECK(std::abs(s.r_max - 0.61803424514279761) < 1e-9);
    CHECK(std::abs(s.r_min - 0.97570968297744968) < 1e-9);
    CHECK(std::abs(r.r_max - 0.61803424514279761) < 1e-10);
    CHECK(std::abs(r.r_min - 0.97570968297744968) < 1e-10);
    CHECK(std::abs(r.r_max - (std::sqrt(5.0) - 1) / 2) < 1e-2);

    auto lo = extremal_radii(1e3), hi = extremal_radii(1e9);
    CHECK(lo.r_max > r.r_max);
    CHECK(r.r_max > hi.r_max);
    CHECK(lo.r_min < r.r_min);
    CHECK(r.r_min < hi.r_min);
    CHECK_THROWS_AS(extremal_radii(0.5), DomainError);
}

TEST_CASE("warping families")
{
    WarpParams p;
    p.kind = WarpKind::Poly;
    p.delta = 1.0 / 3.0;
    p.c3 = 1.0;
    p.Lambda = 60.0;
    p.vbar = 4.0;
    Warping w(p);
    CHECK(w.f0(-3.0) == 8.0);
    CHECK(w.f(p.vbar - 3.0) == 8.0);
    CHECK(w.tail_exponent() == doctest::Approx(0.5));
    CHECK(w.f0(p.Lambda + 10) == doctest::Approx(1 + p.c3 / std::sqrt(p.Lambda + 10)).epsilon(1e-14));
    CHECK(w.verify().empty());

    WarpParams e;
    e.kind = WarpKind::Exp;
    e.c3 = 0.015;
    e.Lambda = 60.0;
    Warping we(e);
    CHECK(we.f0(e.Lambda) == doctest::Approx(1 + e.c3).epsilon(1e-14));
    CHECK(we.verify().empty());
    CHECK(we.f(we.solve_f(2.0)) == doctest::Approx(2.0).epsilon(1e-12));

    WarpParams bad;
    bad.Lambda = 5.0;
    bad.c3 = 1.0;
    CHECK_THROWS_WITH_AS(Warping{bad}, doctest::Contains("-f0' <= 1/8"), DomainError);

    WarpParams flat;
    flat.kind = WarpKind::Flat;
    Warping wf(flat);
    CHECK(wf.f(-100.0) == 1.0);
    CHECK(wf.df(3.0) == 0.0);
}

TEST_CASE("warping derivative is analytic for complex steps")
{
    WarpParams p;
    Warping w(p);
    for (double v : {p.vbar + 0.5, p.vbar + 20.0, p.vbar + 55.5, p.vbar + 80.0}) {
        double h = 1e-20;
        double cs = std::imag(w.f(std::complex<double>(v, h))) / h;
        CHECK(cs == doctest::Approx(w.df(v)).epsilon(1e-7));
    }
}

TEST_CASE("compact coupling")
{
    auto c = build_compact_coupling(0.02);
    CHECK(c.H(0.0) == 0.0);
    CHECK(c.k(c.Lambda) == 0.0);
    CHECK(c.Lambda == doctest::Approx(28.0 / 0.02).epsilon(0.01));
    auto rep = verify_compact_coupling(c, 10000);
    CHECK(rep.violations.empty());
    CHECK(rep.max_tot_geod_residual < 1e-10);
    CHECK(rep.max_neg_df0 <= 0.125);
    CHECK(rep.max_dFdx_at_0 < 1e-10);
    for (double v : {-1.0, 0.3, 0.9, 5.0, c.Lambda - 0.5, c.Lambda + 0.7}) {
        CHECK(c.F(0.0, v + c.vbar) == doctest::Approx(c.H(v) * std::sqrt(2.0) / 2 + c.k(v) + 1).epsilon(1e-14));
        double h = 1e-6;
        CHECK(c.df0(v) == doctest::Approx((c.f0(v + h) - c.f0(v - h)) / (2 * h)).epsilon(1e-5).scale(1e-6));
    }
    // exponential tail with rate 2 pi
    double v1 = c.Lambda + 0.5, v2 = c.Lambda + 1.0;
    CHECK(std::log((c.f0(v1) - 1) / (c.f0(v2) - 1)) == doctest::Approx(pi).epsilon(1e-9));
    CHECK_THROWS_AS(build_compact_coupling(5.0), DomainError);
}

TEST_CASE("bump certification and metric coefficients")
{
    auto cert = certify_bump(1e6, 1.2, 10 * pi);
    CHECK(cert.ok);
    CHECK(cert.eps == doctest::Approx(0.1));
    CHECK_FALSE(certify_bump(100.0, 1.2, 10 * pi).ok);

    WarpParams p;
    TargetGeometry t(1e6, p);
    auto m = t.metric_coefficients(p.vbar + 500.0, 1.0, 0.5);
    CHECK(m.g_vv == 1.0);
    CHECK(m.g_rr == doctest::Approx(t.warping.f(p.vbar + 500.0)));
    CHECK(m.g_thth == doctest::Approx(m.g_rr));
    CHECK(t.metric_coefficients(p.vbar - 1, 2.0, 0.0).g_rr == 8.0);
    CHECK(t.metric_coefficients(0.0, 0.0, 2.0).g_thth == 0.0);
}
