#include "tmf/initial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tmf {

using std::numbers::pi;

double lambda1(double eps) { return 1.0 + std::atanh(1.0 - 0.5 * eps * eps); }
double lambda2(double eps) { return 1.0 + std::log(1.0 / (4.0 * eps)); }

namespace {

struct Layout {
    double X, L1, L2, v_star, tau, k;
};

double plateau_value(const TargetGeometry& tg)
{
    if (tg.warping.params().kind == WarpKind::Flat) return 0.0;
    return tg.warping.solve_f(2.0);
}

Layout layout(const InitialDataSpec& spec, const TargetGeometry& tg, double ell)
{
    Layout L;
    L.X = collar_width(ell, CollarVariant::Cylinder, spec.d);
    L.L1 = lambda1(spec.eps);
    L.L2 = lambda2(spec.eps);
    L.v_star = plateau_value(tg);
    L.tau = spec.ramp_tau;
    L.k = 1.0 / (1.0 - 0.5 * L.tau);
    if (L.L1 + L.L2 + 1.0 > L.X) throw DomainError("initial data: collar too short for the sphere and annulus pieces");
    return L;
}

// ramp profile B on [0,1]: B' = k min(1, t / tau), B(1) = 1
double ramp(double t, const Layout& L)
{
    t = std::clamp(t, 0.0, 1.0);
    if (t <= L.tau) return 0.5 * L.k * t * t / L.tau;
    return L.k * (t - 0.5 * L.tau);
}

}  // namespace

SymmetricMap assemble_initial(const InitialDataSpec& spec, const TargetGeometry& tg, double ell)
{
    if (!(spec.eps > 0.0 && spec.eps < 0.125)) throw DomainError("initial data: eps must lie in (0, 1/8)");
    Layout L = layout(spec, tg, ell);
    SymmetricMap u(spec.n, spec.sigma, spec.z0);
    auto mesh = make_mesh(u.m(), spec.sigma, L.X);
    const double a = L.L1 - 1.0;
    const double phi_a = std::atan2(1.0 / std::cosh(a), std::tanh(a));
    const double leash_lo = L.L1, leash_hi = L.X - L.L2;
    for (int j = 0; j <= u.m(); ++j) {
        double s = mesh.s[j];
        double r, z;
        if (s <= a) {
            r = 1.0 / std::cosh(s);
            z = std::tanh(s);
        } else if (s <= leash_lo) {
            double t = s - a;
            double phi = phi_a * (2 * t * t * t - 3 * t * t + 1) - (1.0 / std::cosh(a)) * (t * t * t - 2 * t * t + t);
            r = std::sin(phi);
            z = std::cos(phi);
        } else if (s <= leash_hi) {
            r = 0.0;
            z = 1.0 + (spec.z0 - 1.0) * (s - leash_lo) / (leash_hi - leash_lo);
        } else if (s <= leash_hi + 1.0) {
            double t = s - leash_hi;
            r = spec.eps * (2 * t * t - t * t * t);
            z = spec.z0;
        } else {
            r = 0.25 * std::exp(s - L.X);
            z = spec.z0;
        }
        u.r[j] = r;
        u.z[j] = z;
        u.v[j] = s <= L.L1 ? L.v_star : L.v_star * (1.0 - ramp((s - L.L1) / (L.X - L.L1), L));
    }
    u.enforce_boundary();
    return u;
}

BudgetReport certify_budget(const SymmetricMap& u, double ell, const TargetGeometry& tg, const InitialDataSpec& spec)
{
    Layout L = layout(spec, tg, ell);
    auto mesh = make_mesh(u.m(), u.sigma, L.X);
    const double eps = spec.eps;
    const double fmax = tg.warping.params().kind == WarpKind::Flat ? tg.warping.f(0.0) : 8.0;
    const double fstar = tg.warping.f(L.v_star);
    BudgetReport rep;
    rep.bound = 10.0 * pi;
    rep.pieces = {
        {"sphere", 0.0, L.L1 - 1.0, 0.0, 4.0 * pi * fstar * 1.005},
        {"cap blend", L.L1 - 1.0, L.L1, 0.0, eps},
        {"leash", L.L1, L.X - L.L2, 0.0, 2.0 * pi * fmax * std::pow(spec.z0 - 1.0, 2) / (L.X - L.L1 - L.L2)},
        {"annulus blend", L.X - L.L2, L.X - L.L2 + 1.0, 0.0, eps},
        {"annulus", L.X - L.L2 + 1.0, L.X, 0.0, 1.005 * 2.0 * fmax * pi * (1.0 / 16.0 - eps * eps)},
        {"v ramp", L.L1, L.X, 0.0, 2.0 * pi * 4.0 * L.v_star * L.v_star / (L.X - L.L1)},
    };
    auto piece_of = [&](double s) {
        for (int p = 0; p < 4; ++p)
            if (s <= rep.pieces[p].s_hi) return p;
        return 4;
    };
    const int m = u.m();
    std::vector<double> K(m + 1);
    rep.min_norm_w = INFINITY;
    for (int j = 0; j <= m; ++j) {
        K[j] = tg.K(u.v_abs(j), u.r[j], u.z[j]);
        rep.min_norm_w = std::min(rep.min_norm_w, std::hypot(u.r[j], u.z[j]));
    }
    for (int c = 0; c < m; ++c) {
        double h = mesh.h[c];
        double dv = u.v[c + 1] - u.v[c], dr = u.r[c + 1] - u.r[c], dz = u.z[c + 1] - u.z[c];
        double A = 0.5 * (K[c] + K[c + 1]);
        double mid = 0.5 * (mesh.s[c] + mesh.s[c + 1]);
        rep.pieces[piece_of(mid)].energy += 2.0 * pi * A * (dr * dr + dz * dz) / h;
        rep.pieces[5].energy += 2.0 * pi * dv * dv / h;
        for (int k : {c, c + 1}) rep.pieces[piece_of(mid)].energy += 2.0 * pi * 0.5 * h * K[k] * u.r[k] * u.r[k];
    }
    rep.ok = true;
    for (auto& p : rep.pieces) {
        p.ok = p.energy <= p.budget;
        rep.total += p.energy;
        if (!p.ok && rep.ok) {
            rep.ok = false;
            rep.overweight = p.name;
        }
    }
    rep.sphere_energy = rep.pieces[0].energy;
    rep.sphere_rel_err = std::abs(rep.sphere_energy - 4.0 * pi * fstar) / (4.0 * pi * fstar);
    if (rep.total > rep.bound) {
        if (rep.ok) rep.overweight = "total";
        rep.ok = false;
    }
    if (rep.min_norm_w < 1.0 - 1e-12) rep.ok = false;
    return rep;
}

InitialData build_initial(const InitialDataSpec& spec, const TargetGeometry& tg)
{
    InitialData out;
    out.Lambda1 = lambda1(spec.eps);
    out.Lambda2 = lambda2(spec.eps);
    out.v_star = plateau_value(tg);
    double ell = spec.ell0;
    if (!(ell > 0.0)) {
        double vbar = tg.warping.params().vbar;
        double hi = std::min(spec.ell_bar, vbar > 0.0 ? 5.0 * pi * pi / (vbar * vbar) : spec.ell_bar);
        auto total = [&](double l) {
            try {
                return certify_budget(assemble_initial(spec, tg, l), l, tg, spec).total;
            } catch (const DomainError&) {
                return double(INFINITY);
            }
        };
        const double target = 10.0 * pi - spec.slack;
        if (total(hi) > target) {
            double lo = hi;
            while (total(lo) > target) {
                lo *= 0.5;
                if (lo < 1e-12) throw DomainError("initial data: no admissible ell0 meets the energy budget");
            }
            double a = lo, b = std::min(hi, 2.0 * lo);
            for (int it = 0; it < 60; ++it) {
                double c = std::sqrt(a * b);
                (total(c) > target ? b : a) = c;
            }
            ell = a;
        } else {
            ell = hi;
        }
    }
    out.ell0 = ell;
    out.map = assemble_initial(spec, tg, ell);
    out.budget = certify_budget(out.map, ell, tg, spec);
    if (!out.budget.ok)
        throw DomainError("initial data: energy budget violated by piece '" + out.budget.overweight + "'");
    return out;
}

}  // namespace tmf
