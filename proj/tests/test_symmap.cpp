#include <doctest.h>

#include "tmf/symmap.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace tmf;
using std::numbers::pi;

namespace {

TargetGeometry flat_target(double value = 1.0)
{
    WarpParams p;
    p.kind = WarpKind::Flat;
    p.flat_value = value;
    return TargetGeometry(1e6, p);
}

// L2(rho^-2) projection of the cell-wise Hopf function onto Re/Im e^{jz}, |j| <= 8
double gram_b0(const SymmetricMap& u, const Frame& fr, const Hopf& hp)
{
    const int J = 8, nb = 4 * J + 1, nth = 64;
    const double X = fr.mesh.X, ell = fr.metric.ell;
    auto basis = [&](int k, double s, double th) {
        if (k == 0) return 1.0;
        int j = (k - 1) / 4 + 1;
        int sign = ((k - 1) / 2) % 2 ? -1 : 1;
        double e = std::exp(sign * j * s - j * X);
        return (k - 1) % 2 ? e * std::sin(j * th) : e * std::cos(j * th);
    };
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nb, nb);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
    const auto& gl = boost::math::quadrature::gauss<double, 8>::abscissa();
    const auto& gw = boost::math::quadrature::gauss<double, 8>::weights();
    std::vector<std::pair<double, double>> nodes;
    for (int j = -u.m(); j < u.m(); ++j) {
        int c = j >= 0 ? j : -j - 1;
        double a = j >= 0 ? fr.mesh.s[c] : -fr.mesh.s[c + 1], b = j >= 0 ? fr.mesh.s[c + 1] : -fr.mesh.s[c];
        double F = hp.psi_cell[c] / (2 * pi);
        for (std::size_t q = 0; q < gl.size(); ++q)
            for (int sg : {-1, 1}) {
                if (gl[q] == 0.0 && sg < 0) continue;
                double x = 0.5 * (a + b) + sg * 0.5 * (b - a) * gl[q];
                double wq = 0.5 * (b - a) * gw[q] * 4 * pi * pi / (ell * ell) * std::pow(std::cos(ell * x / (2 * pi)), 2);
                for (int t = 0; t < nth; ++t) {
                    double th = 2 * pi * t / nth, wt = wq * 2 * pi / nth;
                    Eigen::VectorXd phi(nb);
                    for (int k = 0; k < nb; ++k) phi[k] = basis(k, x, th);
                    G += wt * phi * phi.transpose();
                    rhs += wt * F * phi;
                }
            }
    }
    Eigen::VectorXd coef = G.ldlt().solve(rhs);
    return coef[0];
}

SymmetricMap random_state(std::mt19937_64& rng, int n, double X)
{
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    SymmetricMap u(n, 16.0, 1.2);
    auto mesh = make_mesh(u.m(), u.sigma, X);
    for (int j = 0; j <= u.m(); ++j) {
        double x = mesh.s[j] / X;
        u.v[j] = 30.0 * (1 - x) + 2.0 * U(rng);
        u.r[j] = std::abs(0.6 * std::cos(3 * x) + 0.2 * U(rng));
        u.z[j] = 1.2 * x + 0.3 * U(rng) * x;
    }
    u.enforce_boundary();
    return u;
}

}  // namespace

TEST_CASE("mesh")
{
    auto mesh = make_mesh(512, 16.0, 1000.0);
    CHECK(mesh.s.front() == 0.0);
    CHECK(mesh.s.back() == 1000.0);
    CHECK(mesh.h.front() == doctest::Approx(16.0 / 512).epsilon(1e-3));
    CHECK(mesh.h.back() == doctest::Approx(16.0 / 512).epsilon(1e-3));
    double tot = 0;
    for (double w : mesh.w) tot += w;
    CHECK(tot == doctest::Approx(1000.0));
    auto uni = make_mesh(64, 16.0, 10.0);
    CHECK(uni.h[5] == doctest::Approx(10.0 / 64));
}

TEST_CASE("energy, hopf and leash on linear states")
{
    auto tg = flat_target();
    double ell = 0.3, lam = 0.7;
    SymmetricMap u(256, 16.0, 1.2);
    auto fr = make_frame(u, ell);
    for (int j = 0; j <= u.m(); ++j) {
        u.v[j] = lam * fr.mesh.s[j];
        u.r[j] = 0.0;
        u.z[j] = 0.4;
    }
    CHECK(energy(u, fr, tg) == doctest::Approx(2 * pi * lam * lam * fr.mesh.X).epsilon(1e-12));
    auto hp = hopf(u, fr, tg);
    CHECK(hp.b0 == doctest::Approx(lam * lam).epsilon(1e-12));
    CHECK(hp.psi_std < 1e-12);
    CHECK(hp.psi_mean == doctest::Approx(2 * pi * lam * lam));
    CHECK(leash(u, tg) == doctest::Approx(2 * lam * fr.mesh.X));
    CHECK(variational_b0(u, ell, 1.0, tg) == doctest::Approx(lam * lam).epsilon(1e-7));

    SymmetricMap c(256, 16.0, 1.2);
    std::fill(c.z.begin(), c.z.end(), 0.4);
    c.r.back() = 0.0;
    CHECK(energy(c, fr, tg) == 0.0);
    auto t = tension(c, fr, tg);
    CHECK(t.norm == 0.0);
}

TEST_CASE("hopf b0 matches a Gram projection")
{
    auto tg = flat_target(1.5);
    std::mt19937_64 rng(3);
    double ell = 0.8;
    auto u = random_state(rng, 64, collar_width(ell, CollarVariant::Cylinder));
    auto fr = make_frame(u, ell);
    auto hp = hopf(u, fr, tg);
    double g = gram_b0(u, fr, hp);
    CHECK(std::abs(g - hp.b0) <= 1e-8 * std::max(1.0, std::abs(hp.b0)));
}

TEST_CASE("conformal pieces")
{
    WarpParams wp;
    TargetGeometry tg(1e6, wp);
    double vstar = tg.warping.solve_f(2.0);
    double ell = 0.05;
    SymmetricMap u(2048, 16.0, 1.2);
    auto fr = make_frame(u, ell);
    for (int j = 0; j <= u.m(); ++j) {
        double s = fr.mesh.s[j];
        u.v[j] = vstar;
        u.r[j] = 1 / std::cosh(s);
        u.z[j] = std::tanh(s);
    }
    double tail = 8 * pi * (1 - std::tanh(fr.mesh.X));
    CHECK(energy(u, fr, tg) == doctest::Approx(8 * pi - tail).epsilon(2e-4));
    CHECK(area_w(u, tg) == doctest::Approx(4 * pi).epsilon(2e-4));
    CHECK(disjointness_check(u, tg));
    CHECK(central_w_energy(u, fr, tg) >= 2 * pi);

    double eps = 0.01;
    SymmetricMap a(512, 16.0, 1.2);
    auto fa = make_frame(a, 1.0);
    double L = std::log(0.25 / eps);
    for (int j = 0; j <= a.m(); ++j) {
        double s = fa.mesh.s[j] * L / fa.mesh.X;
        a.r[j] = 0.25 * std::exp(s - L);
        a.z[j] = 1.2;
    }
    // rescale the coordinate so the annulus fills the half collar
    double A = area_w(a, tg);
    CHECK(A == doctest::Approx(2 * pi * (1.0 / 16 - eps * eps)).epsilon(1e-3));

    SymmetricMap d(16, 16.0, 1.2);
    double rm = tg.radii.r_max;
    d.r[3] = rm * std::sqrt(0.5);
    d.z[3] = rm * std::sqrt(0.5);
    CHECK_FALSE(disjointness_check(d, tg));
}

TEST_CASE("tension is the mass-weighted negative gradient")
{
    WarpParams wp;
    TargetGeometry tg(1e6, wp);
    std::mt19937_64 rng(11);
    for (double ell : {0.02, 0.3}) {
        double X = collar_width(ell, CollarVariant::Cylinder);
        auto u = random_state(rng, 128, X);
        auto fr = make_frame(u, ell);
        auto t = tension(u, fr, tg);
        std::normal_distribution<double> N(0, 1);
        std::vector<double> zv(u.m() + 1, 0), zr(u.m() + 1, 0), zz(u.m() + 1, 0);
        for (int j = 0; j < u.m(); ++j) {
            zv[j] = N(rng);
            zr[j] = N(rng);
            zz[j] = j ? N(rng) : 0.0;
        }
        double weak = 0;
        for (int j = 0; j < u.m(); ++j)
            weak += t.mv[j] * t.tv[j] * zv[j] + t.mr[j] * t.tr[j] * zr[j] + t.mz[j] * t.tz[j] * zz[j];
        double h = 1e-5;
        auto shifted = [&](double sg) {
            auto w = u;
            for (int j = 0; j <= u.m(); ++j) {
                w.v[j] += sg * h * zv[j];
                w.r[j] += sg * h * zr[j];
                w.z[j] += sg * h * zz[j];
            }
            return energy(w, fr, tg);
        };
        double fd = (shifted(1) - shifted(-1)) / (2 * h);
        CHECK(std::abs(-weak - fd) <= 1e-6 * std::abs(fd));
    }
    // r = 0, z const: tau^v is rho^-2 times the mesh second difference
    auto tf = flat_target(3.0);
    SymmetricMap u(64, 16.0, 1.2);
    auto fr = make_frame(u, 0.4);
    for (int j = 0; j <= u.m(); ++j) {
        u.v[j] = std::sin(fr.mesh.s[j]);
        u.r[j] = 0;
        u.z[j] = 0.0;
    }
    auto t = tension(u, fr, tf);
    for (int j = 1; j < u.m(); ++j) {
        double h1 = fr.mesh.h[j - 1], h2 = fr.mesh.h[j];
        double vss = ((u.v[j + 1] - u.v[j]) / h2 - (u.v[j] - u.v[j - 1]) / h1) / fr.mesh.w[j];
        CHECK(t.tv[j] == doctest::Approx(vss / fr.rho2[j]).epsilon(1e-10));
    }
}

TEST_CASE("leash bounds and region sets")
{
    WarpParams wp;
    TargetGeometry tg(1e6, wp);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
        double ell = 0.01 + 0.05 * k;
        double X = collar_width(ell, CollarVariant::Cylinder);
        auto u = random_state(rng, 128, X);
        auto fr = make_frame(u, ell);
        double L = leash(u, tg);
        CHECK(L >= 2 * v_max(u) * (1 - 1e-12));
        CHECK(L <= std::sqrt(energy(u, fr, tg) / pi) * std::sqrt(2 * X) * (1 + 1e-12));
    }
    auto tf = flat_target();
    SymmetricMap c(512, 16.0, 1.2);
    std::fill(c.z.begin(), c.z.end(), 1.2);
    c.z[0] = 1.2;
    auto fr = make_frame(c, 0.1);
    auto rs = region_sets(c, fr, tf, 0.05);
    for (std::size_t i = 0; i < rs.s.size(); ++i)
        CHECK(bool(rs.inA[i]) == (std::abs(rs.s[i]) >= fr.mesh.X - 1.0));
    CHECK(rs.count_ok);
    CHECK(rs.length_ok);
    CHECK_THROWS_AS(region_sets(c, make_frame(c, 3.0), tf, 0.05), DomainError);
}
