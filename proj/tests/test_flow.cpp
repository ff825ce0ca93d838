#include <doctest.h>

#include "tmf/flow.hpp"
#include "tmf/initial.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace tmf;
using std::numbers::pi;

namespace {

TargetGeometry flat_target()
{
    WarpParams p;
    p.kind = WarpKind::Flat;
    return TargetGeometry(1e6, p);
}

InitialDataSpec small_spec(int n = 256)
{
    InitialDataSpec s;
    s.n = n;
    s.sigma = 8.0;
    return s;
}

// records on the exact trajectory of d/dt log(1/ell) = A exp(k log(1/ell)), from L0 up to L1
std::vector<Record> exp_trajectory(double A, double k, double L0, double L1, int n)
{
    std::vector<Record> out;
    for (int i = 0; i <= n; ++i) {
        double L = L0 + (L1 - L0) * i / n;
        Record r;
        r.ell = std::exp(-L);
        r.rate = A * std::exp(k * L);
        r.t = (std::exp(-k * L0) - std::exp(-k * L)) / (A * k);
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_CASE("length ode")
{
    FlowParams p;
    p.eta = 2.0;
    CHECK(length_ode_rhs(0.5, 0.1, p) == doctest::Approx(-(4.0 / 4.0) * (2 * pi * pi / 0.1) * 0.5));
    p.mode = FlowMode::Rescaled;
    CHECK(length_ode_rhs(0.5, 0.1, p) == doctest::Approx(-(2 * pi * pi / 0.1) * 0.5));
    CHECK(length_ode_rhs(-1.0, 0.1, p) > 0.0);
}

TEST_CASE("rate fits on exact trajectories")
{
    auto s = exp_trajectory(3.0, 0.4, std::log(1e2), std::log(1e5), 400);
    auto fit = fit_rates(s, FlowMode::Full);
    REQUIRE(fit.available);
    CHECK(fit.delta_fit == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(fit.prefactor == doctest::Approx(3.0).epsilon(1e-9));
    // blow-up where exp(-k L) reaches 0
    double T = std::exp(-0.4 * std::log(1e2)) / (3.0 * 0.4);
    REQUIRE(fit.blowup_time_estimate);
    CHECK(*fit.blowup_time_estimate == doctest::Approx(T).epsilon(1e-9));
    CHECK(fit.ell_span == doctest::Approx(1e3));

    std::vector<Record> r;
    for (int i = 0; i <= 300; ++i) {
        Record q;
        q.ell = std::pow(10.0, -2.0 - 3.0 * i / 300);
        double L = std::log(1.0 / q.ell);
        q.rate = 0.7 * std::pow(L, 1.5);
        r.push_back(q);
    }
    auto g = fit_rates(r, FlowMode::Rescaled);
    REQUIRE(g.available);
    CHECK(g.log_rate_exponent == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(g.prefactor == doctest::Approx(0.7).epsilon(1e-9));

    auto narrow = exp_trajectory(1.0, 0.5, 1.0, 2.0, 100);
    auto h = fit_rates(narrow, FlowMode::Full);
    CHECK_FALSE(h.available);
    CHECK(h.note.find("insufficient") != std::string::npos);
}

TEST_CASE("relaxation reaches a harmonic map")
{
    auto tg = flat_target();
    auto u = assemble_initial(small_spec(), tg, 0.3);
    double E0 = energy(u, make_frame(u, 0.3), tg);
    auto rr = relax_harmonic(u, 0.3, 1.0, tg, 1e-9, 2000);
    REQUIRE(rr.converged);
    CHECK(rr.tension_norm <= 1e-9);
    CHECK(rr.E < E0);
    auto fr = make_frame(u, 0.3);
    CHECK(tension(u, fr, tg).norm <= 1e-9);
    // v decouples under the product metric and relaxes to 0
    for (int j = 0; j <= u.m(); ++j) CHECK(std::abs(u.v_abs(j)) < 1e-8);
}

TEST_CASE("coupled flow steps keep the energy identity")
{
    auto tg = flat_target();
    FlowState st{assemble_initial(small_spec(), tg, 0.3), 0.3, 0.0};
    FlowParams p;
    p.t_max = 0.05;
    p.max_steps = 60;
    auto res = run_flow(st, p, tg);
    REQUIRE(res.series.size() > 10);
    for (std::size_t i = 1; i < res.series.size(); ++i) {
        const auto& a = res.series[i - 1];
        const auto& b = res.series[i];
        CHECK(b.t > a.t);
        CHECK(b.E <= a.E + 1e-8 * res.series.front().E);
        CHECK(b.balance_rel <= p.balance_tol);
        CHECK(b.metric_term <= 0.0);
    }
}

TEST_CASE("run termination")
{
    auto tg = flat_target();
    FlowState st{assemble_initial(small_spec(), tg, 0.3), 0.3, 0.0};
    FlowParams p;
    p.t_max = 0.0;
    auto res = run_flow(st, p, tg);
    CHECK(res.series.empty());
    CHECK(res.cause == "t_max reached");

    p.t_max = 1.0;
    p.max_steps = 3;
    CHECK(run_flow(st, p, tg).cause == "max steps reached");

    p.ell_stop = 0.31;
    auto stop = run_flow(st, p, tg);
    CHECK(stop.cause == "ell_stop reached");
    CHECK(stop.series.size() == 1);
}

TEST_CASE("non-finite states abort")
{
    auto tg = flat_target();
    FlowState st{assemble_initial(small_spec(), tg, 0.3), 0.3, 0.0};
    st.map.r[5] = std::numeric_limits<double>::quiet_NaN();
    FlowParams p;
    CHECK_THROWS_AS(evaluate(st, p, tg), NumericError);
    CHECK(run_flow(st, p, tg).cause == "numeric failure");
}
