#pragma once

#include "tmf/collar.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace tmf {

namespace detail {
inline double re(double x) { return x; }
inline double re(const std::complex<double>& x) { return x.real(); }

// quintic smoothstep and its antiderivative
template <class T> T smooth5(T t) { return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t); }
template <class T> T smooth5_int(T t) { T t4 = t * t * t * t; return t4 * (2.5 - 3.0 * t + t * t); }
inline double dsmooth5(double t) { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }
}  // namespace detail

struct BumpMetric {
    double C_N = 1e6;

    // rho^2 as a function of q = |x|^2
    template <class T> T factor_q(T q) const
    {
        if (detail::re(q) >= 1.0) return T(1.0);
        return 1.0 + C_N * std::exp(1.0 - 1.0 / (1.0 - q));
    }
    template <class T> T dfactor_q(T q) const
    {
        if (detail::re(q) >= 1.0) return T(0.0);
        T a = 1.0 - q;
        return -C_N * std::exp(1.0 - 1.0 / a) / (a * a);
    }
    double factor(double radius) const { return factor_q(radius * radius); }
};

double bump_factor(const BumpMetric& b, double radius);

struct ExtremalRadii {
    double r_max = 0.0;
    double r_min = 0.0;
};

ExtremalRadii extremal_radii(double C_N);

enum class WarpKind { Poly, Exp, Flat };

struct WarpParams {
    WarpKind kind = WarpKind::Poly;
    double delta = 0.5;
    double alpha = 2.0 * 3.14159265358979323846;
    double c3 = 3.0;
    double Lambda = 56.0;
    double vbar = 10.0;
    double flat_value = 1.0;
    double g1 = 0.125;
};

// f(v) = f0(v - vbar); f0 is 8 on (-inf,0], an exact tail on [Lambda,inf), and on
// (0,Lambda) -f0' is a smoothstep blend of a plateau g1 with the tail derivative.
class Warping {
public:
    Warping() = default;
    explicit Warping(const WarpParams& p);

    const WarpParams& params() const { return p_; }
    double g1() const { return g1_; }
    double blend_start() const { return a_; }
    double tail_exponent() const;

    template <class T> T f0(T w) const;
    template <class T> T g(T w) const;  // -f0'
    template <class T> T f(T v) const { return f0(v - p_.vbar); }
    template <class T> T df(T v) const { return -g(v - p_.vbar); }

    double tail_value(double w) const;
    double tail_slope(double w) const;

    // smallest v with f(v) <= value, found by bisection
    double solve_f(double value) const;
    // constraint violations on a dense grid; empty when admissible
    std::vector<std::string> verify(int points = 10000) const;

private:
    template <class T> T table_G(T w) const;
    double drop(double a, double g1) const;
    double tail_int(double a, double b_lo, double b_hi) const;
    void build_table();

    WarpParams p_;
    double g1_ = 0.125;
    double a_ = 1.0;
    double f_a_ = 0.0;
    std::vector<double> tw_, tG_, tdG_;
};

Warping make_warping(const WarpParams& p);

struct CompactCoupling {
    double c4 = 0.02;
    double Lambda = 0.0;
    double vbar = 0.0;
    double plateau = 0.0;  // e^{pi/2} c4
    double slope = 0.0;    // c4 / 4

    double kappa(double v) const;  // -k'
    double k(double v) const;
    // H(v) = h(v) e^{-2 pi (v - Lambda)}, the numerically safe form of h
    double H(double v) const;
    double log_h(double v) const;
    double dh_over_h(double v) const;  // h'/h
    double f0(double v) const;
    double df0(double v) const;
    double tot_geod_residual(double v) const;
    double F(double x, double y) const;
    double dF_dx(double x, double y) const;
};

CompactCoupling build_compact_coupling(double c4);

struct CouplingReport {
    double max_tot_geod_residual = 0.0;
    double max_dh_minus_2pi_h = 0.0;  // max of (h'/h - 2 pi) on [1, inf); <= 0 required
    double max_neg_df0 = 0.0;
    double max_dFdx_at_0 = 0.0;
    std::vector<std::string> violations;
};

CouplingReport verify_compact_coupling(const CompactCoupling& c, int points = 10000);

struct BumpCertificate {
    double lhs = 0.0;
    double E0 = 0.0;
    double eps = 0.0;
    bool ok = false;
};

BumpCertificate certify_bump(double C_N, double z0, double E0);

struct MetricCoefficients {
    double g_vv, g_rr, g_zz, g_thth;
};

struct TargetGeometry {
    BumpMetric bump;
    Warping warping;
    ExtremalRadii radii;

    TargetGeometry() = default;
    TargetGeometry(double C_N, const WarpParams& wp);

    template <class T> T K(T v, T r, T z) const { return warping.f(v) * bump.factor_q(r * r + z * z); }
    MetricCoefficients metric_coefficients(double v, double r, double z) const;
};

// ---- template definitions

template <class T> T Warping::table_G(T w) const
{
    double wr = detail::re(w);
    std::size_t n = tw_.size() - 1;
    double h = (tw_[n] - tw_[0]) / n;
    std::size_t i = static_cast<std::size_t>(std::clamp((wr - tw_[0]) / h, 0.0, double(n - 1)));
    T t = (w - tw_[i]) / h;
    T t2 = t * t, t3 = t2 * t;
    T h00 = 2.0 * t3 - 3.0 * t2 + 1.0, h10 = t3 - 2.0 * t2 + t, h01 = -2.0 * t3 + 3.0 * t2, h11 = t3 - t2;
    return h00 * tG_[i] + h10 * (h * tdG_[i]) + h01 * tG_[i + 1] + h11 * (h * tdG_[i + 1]);
}

template <class T> T Warping::g(T w) const
{
    using std::exp;
    using std::pow;
    double wr = detail::re(w);
    if (p_.kind == WarpKind::Flat || wr <= 0.0) return T(0.0);
    if (wr < 1.0) return g1_ * detail::smooth5(w);
    if (wr <= a_) return T(g1_);
    auto tail = [&](T x) -> T {
        if (p_.kind == WarpKind::Poly) {
            double q = tail_exponent();
            return p_.c3 * q * pow(x, -q - 1.0);
        }
        return p_.c3 * p_.alpha * exp(-p_.alpha * (x - p_.Lambda));
    };
    if (wr >= p_.Lambda) return tail(w);
    T t = (w - a_) / (p_.Lambda - a_);
    T S = detail::smooth5(t);
    return (1.0 - S) * g1_ + S * tail(w);
}

template <class T> T Warping::f0(T w) const
{
    using std::exp;
    using std::pow;
    double wr = detail::re(w);
    if (p_.kind == WarpKind::Flat) return T(p_.flat_value);
    if (wr <= 0.0) return T(8.0);
    if (wr < 1.0) return 8.0 - g1_ * detail::smooth5_int(w);
    if (wr <= a_) return 8.0 - 0.5 * g1_ - g1_ * (w - 1.0);
    if (wr >= p_.Lambda) {
        if (p_.kind == WarpKind::Poly) return 1.0 + p_.c3 * pow(w, -tail_exponent());
        return 1.0 + p_.c3 * exp(-p_.alpha * (w - p_.Lambda));
    }
    double L = p_.Lambda - a_;
    T t = (w - a_) / L;
    return f_a_ - (g1_ * ((w - a_) - L * detail::smooth5_int(t)) + table_G(w));
}

}  // namespace tmf
