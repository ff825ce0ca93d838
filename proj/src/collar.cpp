#include "tmf/collar.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tmf {

using std::numbers::pi;

namespace {

double closed_threshold() { return 2.0 * std::asinh(1.0); }

void check_ell(double ell, CollarVariant variant)
{
    if (!(ell > 0.0)) throw DomainError("collar: ell must be positive");
    if (variant == CollarVariant::Closed && ell > closed_threshold() * (1.0 + 1e-15))
        throw DomainError("collar: closed variant requires ell <= 2 arsinh(1)");
}

template <class F>
double integrate(F f, double a, double b)
{
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &err);
    if (!std::isfinite(v)) throw NumericError("collar: quadrature failed");
    return v;
}

}  // namespace

double collar_width(double ell, CollarVariant variant, double d)
{
    check_ell(ell, variant);
    if (variant == CollarVariant::Closed)
        return 2.0 * pi / ell * (pi / 2.0 - std::atan(std::sinh(ell / 2.0)));
    if (!(d > 0.0)) throw DomainError("collar: d must be positive");
    return 2.0 * pi / ell * (pi / 2.0 - std::atan(ell / d));
}

double dcollar_width_dell(double ell, double d)
{
    double X = collar_width(ell, CollarVariant::Cylinder, d);
    return -X / ell - 2.0 * pi / (ell * d) / (1.0 + ell * ell / (d * d));
}

CollarMetric::CollarMetric(double ell_, CollarVariant variant_, double d_)
    : ell(ell_), variant(variant_), d(d_), X(collar_width(ell_, variant_, d_))
{
}

double CollarMetric::rho(double s) const { return ell / (2.0 * pi) / std::cos(ell * s / (2.0 * pi)); }

double CollarMetric::rho_inv2(double s) const
{
    double c = std::cos(ell * s / (2.0 * pi));
    return 4.0 * pi * pi * c * c / (ell * ell);
}

double CollarMetric::dlogrho(double s) const { return ell / (2.0 * pi) * std::tan(ell * s / (2.0 * pi)); }

double conformal_factor(const CollarMetric& m, double s)
{
    if (std::abs(s) > m.X * (1.0 + 1e-14)) throw DomainError("conformal_factor: |s| > X");
    return m.rho(s);
}

double thin_part_width(double ell, double eps)
{
    if (!(ell > 0.0) || !(eps > 0.0)) throw DomainError("thin_part_width: ell and eps must be positive");
    double q = std::sinh(ell / 2.0) / std::sinh(eps);
    if (q > 1.0) throw DomainError("thin_part_width: thin part is empty (sinh(eps) < sinh(ell/2))");
    return 2.0 * pi / ell * (pi / 2.0 - std::asin(q));
}

double injectivity_radius(const CollarMetric& m, double s)
{
    if (std::abs(s) > m.X * (1.0 + 1e-14)) throw DomainError("injectivity_radius: |s| > X");
    return std::asinh(std::sinh(m.ell / 2.0) / std::cos(m.ell * s / (2.0 * pi)));
}

double rho_inv2_integral(double ell, double a, double b)
{
    // integral of (4 pi^2 / ell^2) cos^2(ell s / 2 pi)
    auto F = [ell](double s) { return s / 2.0 + pi / (2.0 * ell) * std::sin(ell * s / pi); };
    return 4.0 * pi * pi / (ell * ell) * (F(b) - F(a));
}

CollarBoundReport collar_bound_report(const CollarMetric& m, int probes)
{
    CollarBoundReport rep;
    rep.int_sqrt_rho = integrate([&](double s) { return std::sqrt(m.rho(s)); }, 0.0, m.X);
    rep.int_sqrt_rho_bound = 2.0 * std::sqrt(2.0) * pi / std::sqrt(m.ell);
    rep.sqrt_rho_margin = rep.int_sqrt_rho_bound - rep.int_sqrt_rho;
    rep.area_margin = INFINITY;
    for (int i = 0; i <= probes; ++i) {
        double s = m.X * i / probes;
        // 2 pi int_0^s rho^2 = ell tan(ell s / 2 pi) / ... computed by quadrature
        double area = s > 0.0 ? 2.0 * pi * integrate([&](double t) { double r = m.rho(t); return r * r; }, 0.0, s) : 0.0;
        double margin = 2.0 * pi * m.rho(s) - area;
        rep.probes.push_back(margin);
        rep.area_margin = std::min(rep.area_margin, margin);
    }
    rep.ok = rep.sqrt_rho_margin > 0.0 && rep.area_margin >= 0.0;
    return rep;
}

}  // namespace tmf
