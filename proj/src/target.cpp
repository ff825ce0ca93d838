#include "tmf/target.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tmf {

using std::numbers::pi;
using detail::smooth5;
using detail::smooth5_int;

double bump_factor(const BumpMetric& b, double radius)
{
    if (radius < 0.0) throw DomainError("bump_factor: negative radius");
    return b.factor(radius);
}

// ---------------------------------------------------------------- extremal radii

namespace {

// sign of d/dr (r^2 P(r)) / (2r)
double radial_slope(const BumpMetric& b, double r)
{
    double q = r * r;
    return b.factor_q(q) + q * b.dfactor_q(q);
}

}  // namespace

ExtremalRadii extremal_radii(double C_N)
{
    if (!(C_N > 0.0)) throw DomainError("extremal_radii: C_N must be positive");
    BumpMetric b{C_N};
    const int N = 200000;
    std::vector<std::pair<double, double>> brackets;
    double prev = radial_slope(b, 0.0);
    for (int i = 1; i < N; ++i) {
        double r = double(i) / N;
        double cur = radial_slope(b, r);
        if ((prev > 0.0) != (cur > 0.0)) brackets.emplace_back(double(i - 1) / N, r);
        prev = cur;
    }
    if (brackets.size() != 2)
        throw DomainError("extremal_radii: C_N below admissible threshold (found " +
                          std::to_string(brackets.size()) + " critical points)");
    auto bisect = [&](double lo, double hi) {
        bool lo_pos = radial_slope(b, lo) > 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            double mid = 0.5 * (lo + hi);
            if ((radial_slope(b, mid) > 0.0) == lo_pos) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    return {bisect(brackets[0].first, brackets[0].second), bisect(brackets[1].first, brackets[1].second)};
}

// ---------------------------------------------------------------- warping

double Warping::tail_exponent() const
{
    if (p_.kind != WarpKind::Poly) return 0.0;
    return 2.0 / (1.0 + p_.delta) - 1.0;
}

double Warping::tail_value(double w) const
{
    if (p_.kind == WarpKind::Poly) return 1.0 + p_.c3 * std::pow(w, -tail_exponent());
    if (p_.kind == WarpKind::Exp) return 1.0 + p_.c3 * std::exp(-p_.alpha * (w - p_.Lambda));
    return p_.flat_value;
}

double Warping::tail_slope(double w) const
{
    if (p_.kind == WarpKind::Poly) {
        double q = tail_exponent();
        return p_.c3 * q * std::pow(w, -q - 1.0);
    }
    if (p_.kind == WarpKind::Exp) return p_.c3 * p_.alpha * std::exp(-p_.alpha * (w - p_.Lambda));
    return 0.0;
}

double Warping::tail_int(double a, double lo, double hi) const
{
    double L = p_.Lambda - a;
    if (L <= 0.0 || hi <= lo) return 0.0;
    auto f = [&](double w) { return smooth5((w - a) / L) * tail_slope(w); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-14);
}

double Warping::drop(double a, double g1) const
{
    return 0.5 * g1 + g1 * (a - 1.0) + 0.5 * g1 * (p_.Lambda - a) + tail_int(a, a, p_.Lambda);
}

void Warping::build_table()
{
    const int N = 8192;
    double lo = a_, hi = p_.Lambda;
    tw_.resize(N + 1);
    tG_.assign(N + 1, 0.0);
    tdG_.resize(N + 1);
    double L = hi - lo;
    for (int i = 0; i <= N; ++i) {
        tw_[i] = lo + L * i / N;
        tdG_[i] = smooth5((tw_[i] - lo) / L) * tail_slope(tw_[i]);
    }
    auto integrand = [&](double w) { return smooth5((w - lo) / L) * tail_slope(w); };
    for (int i = 0; i < N; ++i)
        tG_[i + 1] = tG_[i] + boost::math::quadrature::gauss<double, 10>::integrate(integrand, tw_[i], tw_[i + 1]);
}

Warping::Warping(const WarpParams& p) : p_(p), g1_(p.g1)
{
    if (p_.kind == WarpKind::Flat) {
        if (!(p_.flat_value > 0.0)) throw DomainError("warping: flat value must be positive");
        return;
    }
    if (p_.kind == WarpKind::Poly && !(p_.delta > 0.0 && p_.delta < 1.0))
        throw DomainError("warping: delta must lie in (0,1)");
    if (p_.kind == WarpKind::Exp && !(p_.alpha > 0.0)) throw DomainError("warping: alpha must be positive");
    if (!(p_.c3 > 0.0)) throw DomainError("warping: c3 must be positive");
    if (!(p_.Lambda > 1.0)) throw DomainError("warping: Lambda must exceed 1");
    if (!(p_.vbar >= 0.0)) throw DomainError("warping: vbar must be nonnegative");
    if (!(g1_ > 0.0 && g1_ <= 0.125)) throw DomainError("warping: blend slope g1 must lie in (0, 1/8]");

    double T = tail_value(p_.Lambda);
    if (T > 7.0) throw DomainError("warping: constraint f0 > 7 on (-inf,1) / tail value at Lambda above 7");
    if (tail_slope(p_.Lambda) > 0.125) throw DomainError("warping: constraint -f0' <= 1/8 violated by the tail at Lambda");
    double D = 8.0 - T;
    double dmax = g1_ * (p_.Lambda - 0.5);
    if (D > dmax) {
        std::ostringstream os;
        os << "warping: constraint -f0' <= 1/8 infeasible: drop 8 - f0(Lambda) = " << D
           << " exceeds g1 (Lambda - 1/2) = " << dmax << "; increase Lambda or c3";
        throw DomainError(os.str());
    }
    // the blend may only start where the tail slope is already below the plateau slope
    auto a_min = [&](double g) {
        double w;
        if (p_.kind == WarpKind::Poly) {
            double q = tail_exponent();
            w = std::pow(p_.c3 * q / g, 1.0 / (q + 1.0));
        } else {
            w = p_.Lambda - std::log(g / (p_.c3 * p_.alpha)) / p_.alpha;
        }
        return std::clamp(w, 1.0, p_.Lambda);
    };
    if (drop(a_min(g1_), g1_) > D) {
        double lo = 0.0, hi = g1_;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            double mid = 0.5 * (lo + hi);
            if (drop(a_min(mid), mid) < D) lo = mid; else hi = mid;
        }
        g1_ = 0.5 * (lo + hi);
        a_ = a_min(g1_);
    } else {
        double lo = a_min(g1_), hi = p_.Lambda;
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
            double mid = 0.5 * (lo + hi);
            if (drop(mid, g1_) < D) lo = mid; else hi = mid;
        }
        a_ = 0.5 * (lo + hi);
    }
    f_a_ = 8.0 - 0.5 * g1_ - g1_ * (a_ - 1.0);
    build_table();
    auto bad = verify();
    if (!bad.empty()) throw DomainError("warping: " + bad.front());
}

double Warping::solve_f(double value) const
{
    if (p_.kind == WarpKind::Flat) throw DomainError("solve_f: flat warping is not invertible");
    if (!(value > 1.0 && value < 8.0)) throw DomainError("solve_f: value must lie in (1,8)");
    double lo = p_.vbar, hi = p_.vbar + p_.Lambda;
    while (f(hi) > value) hi = p_.vbar + 2.0 * (hi - p_.vbar);
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) > value) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<std::string> Warping::verify(int points) const
{
    std::vector<std::string> out;
    if (p_.kind == WarpKind::Flat) return out;
    auto fail = [&](const std::string& what, double w) {
        std::ostringstream os;
        os << "constraint " << what << " violated at w = " << w;
        out.push_back(os.str());
    };
    double lo = -5.0, hi = p_.Lambda + 20.0;
    double prev_f = f0(lo), prev_g = g(lo), prev_w = lo;
    bool seen_mono = false, seen_dec = false;
    for (int i = 0; i <= points; ++i) {
        double w = lo + (hi - lo) * i / points;
        double fw = f0(w), gw = g(w);
        if (w <= 0.0 && fw != 8.0) fail("f0 = 8 on (-inf,0]", w);
        if (w < 1.0 && !(fw > 7.0)) fail("f0 > 7 on (-inf,1)", w);
        if (!seen_mono && fw > prev_f + 1e-12) { fail("f0 non-increasing", w); seen_mono = true; }
        if (gw > 0.125 + 1e-15) fail("-f0' <= 1/8", w);
        if (w >= 1.0 && !(gw > 0.0)) fail("-f0' > 0 on [1,inf)", w);
        if (prev_w >= 1.0 && !seen_dec && gw > prev_g + 1e-15) { fail("-f0' decreasing on [1,inf)", w); seen_dec = true; }
        if (w >= p_.Lambda && std::abs(fw - tail_value(w)) > 1e-12) fail("exact tail on [Lambda,inf)", w);
        double h = 1e-5;
        if (std::abs(w) > 2 * h && std::abs(w - 1.0) > 2 * h) {
            double fd = (f0(w + h) - f0(w - h)) / (2 * h);
            if (std::abs(fd + gw) > 1e-6) fail("f0' = -g consistency", w);
        }
        prev_f = fw;
        prev_g = gw;
        prev_w = w;
        if (out.size() > 8) break;
    }
    double jump = std::abs(f0(p_.Lambda - 1e-12) - tail_value(p_.Lambda));
    if (jump > 1e-8) fail("continuity at Lambda", p_.Lambda);
    return out;
}

Warping make_warping(const WarpParams& p) { return Warping(p); }

// ---------------------------------------------------------------- compact coupling

double CompactCoupling::kappa(double v) const
{
    const double A = plateau, B = slope;
    if (v <= 0.0 || v >= Lambda) return 0.0;
    if (v < 0.5) return A * smooth5(2.0 * v);
    if (v <= 0.75) return A;
    if (v < 1.0) return A + (B - A) * smooth5(4.0 * (v - 0.75));
    if (v <= Lambda - 1.0) return B;
    return B * (1.0 - smooth5(v - Lambda + 1.0));
}

namespace {

double dkappa(const CompactCoupling& c, double v)
{
    const double A = c.plateau, B = c.slope;
    if (v <= 0.0 || v >= c.Lambda) return 0.0;
    if (v < 0.5) return 2.0 * A * detail::dsmooth5(2.0 * v);
    if (v <= 0.75) return 0.0;
    if (v < 1.0) return 4.0 * (B - A) * detail::dsmooth5(4.0 * (v - 0.75));
    if (v <= c.Lambda - 1.0) return 0.0;
    return -B * detail::dsmooth5(v - c.Lambda + 1.0);
}

// int_0^v e^{2 pi (t - v)} kappa'(t) dt
double scaled_J(const CompactCoupling& c, double v)
{
    const double pieces[3][2] = {{0.0, 0.5}, {0.75, 1.0}, {c.Lambda - 1.0, c.Lambda}};
    double sum = 0.0;
    for (auto& p : pieces) {
        double lo = p[0], hi = std::min(p[1], v);
        if (hi <= lo) continue;
        if (v - hi > 200.0) continue;
        auto f = [&](double t) { return std::exp(2.0 * pi * (t - v)) * dkappa(c, t); };
        sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 10, 1e-13);
    }
    return sum;
}

}  // namespace

double CompactCoupling::k(double v) const
{
    const double A = plateau, B = slope;
    if (v <= 0.0) return 7.0;
    if (v >= Lambda) return 0.0;
    double used = 0.0;
    if (v < 0.5) return 7.0 - A * 0.5 * smooth5_int(2.0 * v);
    used = A / 4.0;
    if (v <= 0.75) return 7.0 - used - A * (v - 0.5);
    used += A / 4.0;
    if (v < 1.0) {
        double t = 4.0 * (v - 0.75);
        return 7.0 - used - 0.25 * (A * t + (B - A) * smooth5_int(t));
    }
    used += (A + B) / 8.0;
    if (v <= Lambda - 1.0) return 7.0 - used - B * (v - 1.0);
    used += B * (Lambda - 2.0);
    double t = v - Lambda + 1.0;
    return 7.0 - used - B * (t - smooth5_int(t));
}

double CompactCoupling::H(double v) const
{
    if (v <= 0.0) return 0.0;
    return std::sqrt(2.0) / (2.0 * pi) * (kappa(v) - scaled_J(*this, v));
}

double CompactCoupling::dh_over_h(double v) const
{
    double Hv = H(v);
    if (Hv <= 0.0) return 0.0;
    return std::sqrt(2.0) * kappa(v) / Hv;
}

double CompactCoupling::log_h(double v) const { return std::log(H(v)) + 2.0 * pi * (v - Lambda); }

double CompactCoupling::f0(double v) const { return H(v) * std::sqrt(2.0) / 2.0 + k(v) + 1.0; }

double CompactCoupling::df0(double v) const { return -std::sqrt(2.0) * pi * H(v); }

double CompactCoupling::tot_geod_residual(double v) const
{
    // k' + e^{-2 pi (v - Lambda)} (sqrt2/2) h' with h' = sqrt2 e^{2 pi (v - Lambda)} |k'|
    double kp = -kappa(v);
    double scaled_hp = std::sqrt(2.0) * kappa(v);
    return kp + std::sqrt(2.0) / 2.0 * scaled_hp;
}

double CompactCoupling::F(double x, double y) const
{
    double w = x + y - vbar;
    return H(w) * (std::sin(2.0 * pi * (x - 0.125)) + std::sqrt(2.0)) + k(w) + 1.0;
}

double CompactCoupling::dF_dx(double x, double y) const
{
    double w = x + y - vbar;
    double Hw = H(w);
    double dH = w > 0.0 ? std::sqrt(2.0) * kappa(w) - 2.0 * pi * Hw : 0.0;
    return dH * (std::sin(2.0 * pi * (x - 0.125)) + std::sqrt(2.0)) +
           Hw * 2.0 * pi * std::cos(2.0 * pi * (x - 0.125)) - kappa(w);
}

CompactCoupling build_compact_coupling(double c4)
{
    if (!(c4 > 0.0)) throw DomainError("compact coupling: c4 must be positive");
    CompactCoupling c;
    c.c4 = c4;
    c.plateau = std::exp(pi / 2.0) * c4;
    c.slope = c4 / 4.0;
    const double A = c.plateau, B = c.slope;
    double rest = A / 2.0 + (A + B) / 8.0 + B / 2.0;
    if (rest >= 7.0) throw DomainError("compact coupling: infeasible c4 (profile overshoots k = 0 before v = 1)");
    c.Lambda = 2.0 + (7.0 - rest) / B;
    if (!(c.Lambda > 2.0) || std::abs(c.k(c.Lambda - 1e-12)) > 1e-9)
        throw DomainError("compact coupling: Lambda solve failed (infeasible c4)");
    auto rep = verify_compact_coupling(c, 2000);
    if (!rep.violations.empty()) throw DomainError("compact coupling: " + rep.violations.front());
    return c;
}

CouplingReport verify_compact_coupling(const CompactCoupling& c, int points)
{
    CouplingReport rep;
    double lo = -2.0, hi = c.Lambda + 5.0;
    double J1 = scaled_J(c, 1.0);
    for (int i = 0; i <= points; ++i) {
        double v = lo + (hi - lo) * i / points;
        rep.max_tot_geod_residual = std::max(rep.max_tot_geod_residual, std::abs(c.tot_geod_residual(v)));
        rep.max_neg_df0 = std::max(rep.max_neg_df0, -c.df0(v));
        rep.max_dFdx_at_0 = std::max(rep.max_dFdx_at_0, std::abs(c.dF_dx(0.0, v + c.vbar)));
        if (v >= 1.0 && v < c.Lambda) {
            // h' - 2 pi h = -sqrt2 e^{2 pi (v - Lambda)} int_0^v e^{2 pi (t - v)} (-k'') dt
            double J = scaled_J(c, v);
            rep.max_dh_minus_2pi_h = std::max(rep.max_dh_minus_2pi_h, J);
        }
        double kp = c.kappa(v);
        if (kp < 0.0 || kp > std::exp(pi) * c.c4) rep.violations.push_back("0 <= -k' <= e^pi c4 at v = " + std::to_string(v));
        if (v <= 0.0 && c.f0(v) != 8.0) rep.violations.push_back("f0 = 8 on (-inf,0] at v = " + std::to_string(v));
        if (rep.violations.size() > 8) break;
    }
    if (J1 > 0.0) rep.violations.push_back("h' <= 2 pi h at v = 1");
    if (rep.max_tot_geod_residual >= 1e-10) rep.violations.push_back("totally geodesic residual >= 1e-10");
    if (rep.max_neg_df0 > 0.125) rep.violations.push_back("-f0' <= 1/8");
    if (rep.max_dh_minus_2pi_h > 0.0) rep.violations.push_back("h' <= 2 pi h on [1,inf)");
    return rep;
}

// ---------------------------------------------------------------- certification and target

BumpCertificate certify_bump(double C_N, double z0, double E0)
{
    if (!(z0 > 1.0)) throw DomainError("certify_bump: z0 must exceed 1");
    BumpCertificate c;
    c.eps = std::min(z0 - 1.0, 0.1);
    c.E0 = E0;
    c.lhs = 4.0 * pi * c.eps * C_N * std::exp(1.0 - 1.0 / (1.0 - 9.0 / 16.0)) / 4.0;
    c.ok = c.lhs > E0;
    return c;
}

TargetGeometry::TargetGeometry(double C_N, const WarpParams& wp)
    : bump{C_N}, warping(wp), radii(extremal_radii(C_N))
{
}

MetricCoefficients TargetGeometry::metric_coefficients(double v, double r, double z) const
{
    if (r < 0.0) throw DomainError("metric_coefficients: r must be nonnegative");
    double K = this->K(v, r, z);
    return {1.0, K, K, K * r * r};
}

}  // namespace tmf
