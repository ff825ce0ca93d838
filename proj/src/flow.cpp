#include "tmf/flow.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace tmf {

using std::numbers::pi;

namespace {

struct Blocks {
    std::vector<Eigen::Matrix3d> L, D, U;
    explicit Blocks(int m) : L(m, Eigen::Matrix3d::Zero()), D(m, Eigen::Matrix3d::Zero()), U(m, Eigen::Matrix3d::Zero()) {}
};

// Hessian of the discrete energy by complex steps on the templated gradient; nodes
// three apart never share a stencil, so 3 colours x 3 fields suffice.
void add_hessian(const Mesh& mesh, const TargetGeometry& tg, const SymmetricMap& u, Blocks& B)
{
    using C = std::complex<double>;
    const int m = u.m();
    const double h = 1e-20;
    std::vector<C> v(m + 1), r(m + 1), z(m + 1), gv, gr, gz;
    for (int color = 0; color < 3; ++color)
        for (int k = 0; k < 3; ++k) {
            for (int j = 0; j <= m; ++j) {
                v[j] = u.v[j];
                r[j] = u.r[j];
                z[j] = u.z[j];
            }
            auto& f = k == 0 ? v : (k == 1 ? r : z);
            for (int p = color; p < m; p += 3) f[p] += C(0.0, h);
            energy_gradient<C>(mesh, tg, v, r, z, &gv, &gr, &gz, u.v_ref);
            for (int i = 0; i < m; ++i) {
                int p = i - 1;
                while (p < 0 || ((p % 3) != color)) ++p;
                if (p > i + 1 || p >= m) continue;
                Eigen::Vector3d col(gv[i].imag() / h, gr[i].imag() / h, gz[i].imag() / h);
                if (p == i) B.D[i].col(k) += col;
                else if (p == i - 1) B.L[i].col(k) += col;
                else B.U[i].col(k) += col;
            }
        }
}

std::vector<Eigen::Vector3d> solve_blocks(Blocks B, std::vector<Eigen::Vector3d> b)
{
    const int m = int(B.D.size());
    // z at the centre is pinned
    B.D[0].row(2) = Eigen::RowVector3d(0, 0, 1);
    B.U[0].row(2).setZero();
    b[0][2] = 0.0;
    std::vector<Eigen::Matrix3d> Cp(m);
    std::vector<Eigen::Vector3d> dp(m);
    Eigen::Matrix3d den = B.D[0];
    auto lu = den.partialPivLu();
    Cp[0] = lu.solve(B.U[0]);
    dp[0] = lu.solve(b[0]);
    for (int j = 1; j < m; ++j) {
        den = B.D[j] - B.L[j] * Cp[j - 1];
        auto luj = den.partialPivLu();
        Cp[j] = luj.solve(B.U[j]);
        dp[j] = luj.solve(b[j] - B.L[j] * dp[j - 1]);
    }
    std::vector<Eigen::Vector3d> x(m);
    x[m - 1] = dp[m - 1];
    for (int j = m - 2; j >= 0; --j) x[j] = dp[j] - Cp[j] * x[j + 1];
    return x;
}

struct Mass {
    std::vector<Eigen::Vector3d> M;
};

Mass lumped_mass(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg)
{
    Mass ms;
    ms.M.resize(u.m());
    for (int j = 0; j < u.m(); ++j) {
        double base = 4.0 * pi * fr.rho2[j] * fr.mesh.w[j];
        double K = tg.K(u.v_abs(j), u.r[j], u.z[j]);
        ms.M[j] = Eigen::Vector3d(base, base * K, base * K);
    }
    return ms;
}

double max_abs(const SymmetricMap& u)
{
    double a = 0.0;
    for (int j = 0; j <= u.m(); ++j) a = std::max({a, std::abs(u.v[j]), std::abs(u.r[j]), std::abs(u.z[j])});
    return a;
}

bool finite_state(const SymmetricMap& u)
{
    for (int j = 0; j <= u.m(); ++j)
        if (!std::isfinite(u.v[j]) || !std::isfinite(u.r[j]) || !std::isfinite(u.z[j])) return false;
    return true;
}

}  // namespace

double length_ode_rhs(double b0, double ell, const FlowParams& p)
{
    double base = -(2.0 * pi * pi / ell) * b0;
    return p.mode == FlowMode::Full ? 0.25 * p.eta * p.eta * base : base;
}

Record evaluate(const FlowState& s, const FlowParams& p, const TargetGeometry& tg)
{
    Record rec;
    auto fr = make_frame(s.map, s.ell, p.d);
    rec.t = s.t;
    rec.ell = s.ell;
    rec.X = fr.mesh.X;
    rec.E = energy(s.map, fr, tg);
    auto hp = hopf(s.map, fr, tg);
    rec.psi_mean = hp.psi_mean;
    rec.psi_std = hp.psi_std;
    rec.b0_hopf = hp.b0;
    rec.I = hp.I;
    rec.tension_norm = tension(s.map, fr, tg).norm;
    rec.dE_dl = horizontal_energy_derivative(s.map, s.ell, p.d, tg);
    rec.b0 = 4.0 * pi * pi * rec.dE_dl / (s.ell * fr.W);
    rec.ell_dot = length_ode_rhs(rec.b0, s.ell, p);
    rec.rate = -rec.ell_dot / s.ell;
    rec.metric_term = rec.dE_dl * rec.ell_dot;
    rec.L_leash = leash(s.map, tg);
    rec.v_max = v_max(s.map);
    rec.area_w = area_w(s.map, tg);
    rec.central_w = central_w_energy(s.map, fr, tg, 8.0);
    rec.min_v_central = min_v_central(s.map, fr, 8.0);
    rec.disjoint = disjointness_check(s.map, tg);
    for (double x : {rec.E, rec.b0, rec.tension_norm, rec.L_leash, rec.psi_mean})
        if (!std::isfinite(x)) throw NumericError("numeric failure: non-finite observable");
    return rec;
}

RelaxResult relax_harmonic(SymmetricMap& u, double ell, double d, const TargetGeometry& tg, double tol, int max_iter)
{
    const int m = u.m();
    u.rebase();
    auto fr = make_frame(u, ell, d);
    RelaxResult res;
    auto t = tension(u, fr, tg);
    double E = energy(u, fr, tg);
    double dtp = 1e-6;
    int stall = 0;
    double best = t.norm;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it;
        if (t.norm <= tol) {
            res.converged = true;
            break;
        }
        auto ms = lumped_mass(u, fr, tg);
        Blocks B(m);
        add_hessian(fr.mesh, tg, u, B);
        std::vector<Eigen::Vector3d> rhs(m);
        for (int j = 0; j < m; ++j) {
            B.D[j].diagonal() += ms.M[j] / dtp;
            rhs[j] = -Eigen::Vector3d(t.gv[j], t.gr[j], t.gz[j]);
        }
        auto dx = solve_blocks(B, rhs);
        SymmetricMap trial = u;
        for (int j = 0; j < m; ++j) {
            trial.v[j] += dx[j][0];
            trial.r[j] += dx[j][1];
            trial.z[j] += dx[j][2];
        }
        trial.enforce_boundary();
        bool ok = finite_state(trial);
        double E1 = ok ? energy_gradient<double>(fr.mesh, tg, trial.v, trial.r, trial.z, nullptr, nullptr, nullptr, trial.v_ref) : INFINITY;
        Tension t1;
        if (ok && std::isfinite(E1)) t1 = tension(trial, fr, tg);
        ok = ok && std::isfinite(E1) && std::isfinite(t1.norm) &&
             (E1 <= E + 1e-12 * std::max(1.0, std::abs(E)) || t1.norm < 0.5 * t.norm);
        if (!ok) {
            dtp *= 0.25;
            if (dtp < 1e-30) break;
            continue;
        }
        double ratio = t.norm / std::max(t1.norm, 1e-300);
        u = trial;
        u.rebase();
        E = E1;
        t = std::move(t1);
        dtp = std::min(1e30, dtp * std::clamp(2.0 * ratio, 2.0, 10.0));
        if (t.norm < 0.9 * best) {
            best = t.norm;
            stall = 0;
        } else if (++stall > 40) {
            break;
        }
    }
    res.tension_norm = t.norm;
    res.E = E;
    if (t.norm <= tol) res.converged = true;
    return res;
}

StepOutcome step_full(FlowState& state, Record& cur, double dt, const FlowParams& p, const TargetGeometry& tg)
{
    StepOutcome out;
    state.map.rebase();
    const SymmetricMap& un = state.map;
    const int m = un.m();
    double ell0 = state.ell, ell1 = ell0 + dt * cur.ell_dot;
    if (!(ell1 > 0.0) || std::abs(ell1 - ell0) > 0.1 * ell0 ||
        std::abs(std::log(ell1 / ell0)) > p.dlogl_max * (1.0 + 1e-9)) {
        out.reason = "length cap";
        return out;
    }
    auto mesh0 = make_mesh(m, un.sigma, collar_width(ell0, CollarVariant::Cylinder, p.d));
    auto fr1 = make_frame(un, ell1, p.d);
    const auto& mesh1 = fr1.mesh;
    double lm = 0.5 * (ell0 + ell1), ldot = (ell1 - ell0) / dt;
    std::vector<double> c(m + 1, 0.0);
    for (int j = 1; j < m; ++j) {
        double sm = 0.5 * (mesh0.s[j] + mesh1.s[j]);
        c[j] = (mesh1.s[j] - mesh0.s[j]) / dt + ldot / lm * (sm + pi / lm * std::sin(lm * sm / pi));
    }
    auto ms = lumped_mass(un, fr1, tg);
    // centred derivative stencil per node
    std::vector<double> ca(m + 1, 0.0), cb(m + 1, 0.0), cg(m + 1, 0.0);
    for (int j = 1; j < m; ++j) {
        double h1 = mesh1.h[j - 1], h2 = mesh1.h[j], den = h1 * h2 * (h1 + h2);
        ca[j] = -h2 * h2 / den;
        cb[j] = (h2 * h2 - h1 * h1) / den;
        cg[j] = h1 * h1 / den;
    }
    SymmetricMap u = un;
    double umax = max_abs(un);
    bool converged = false;
    std::vector<double> gv, gr, gz;
    for (int it = 0; it < 30; ++it) {
        out.newton_iterations = it + 1;
        energy_gradient<double>(mesh1, tg, u.v, u.r, u.z, &gv, &gr, &gz, u.v_ref);
        std::vector<Eigen::Vector3d> rhs(m);
        const std::vector<double>* F[3] = {&u.v, &u.r, &u.z};
        const std::vector<double>* Fn[3] = {&un.v, &un.r, &un.z};
        const std::vector<double>* G[3] = {&gv, &gr, &gz};
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < 3; ++k) {
                const auto& f = *F[k];
                double Du = j > 0 ? ca[j] * f[j - 1] + cb[j] * f[j] + cg[j] * f[j + 1] : 0.0;
                rhs[j][k] = -(ms.M[j][k] * ((f[j] - (*Fn[k])[j]) / dt - c[j] * Du) + (*G[k])[j]);
            }
        Blocks B(m);
        add_hessian(mesh1, tg, u, B);
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < 3; ++k) {
                double Mk = ms.M[j][k];
                B.D[j](k, k) += Mk / dt - Mk * c[j] * cb[j];
                if (j > 0) B.L[j](k, k) -= Mk * c[j] * ca[j];
                B.U[j](k, k) -= Mk * c[j] * cg[j];
            }
        auto dx = solve_blocks(B, rhs);
        double dmax = 0.0;
        for (int j = 0; j < m; ++j) {
            u.v[j] += dx[j][0];
            u.r[j] += dx[j][1];
            u.z[j] += dx[j][2];
            dmax = std::max({dmax, std::abs(dx[j][0]), std::abs(dx[j][1]), std::abs(dx[j][2])});
        }
        u.enforce_boundary();
        if (!finite_state(u)) break;
        if (dmax <= 1e-12 * (1.0 + umax)) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        out.reason = "newton";
        return out;
    }
    FlowState next{u, ell1, state.t + dt};
    Record rec = evaluate(next, p, tg);
    if (rec.E > cur.E + p.energy_tol * std::abs(cur.E)) {
        out.reason = "energy";
        return out;
    }
    double fd = (rec.E - cur.E) / dt;
    double Tm = 0.5 * (cur.tension_norm * cur.tension_norm + rec.tension_norm * rec.tension_norm);
    double mstep = 0.5 * (cur.dE_dl + rec.dE_dl) * (ell1 - ell0) / dt;
    double model = -Tm + mstep;
    double scale = std::max(Tm, std::abs(mstep));
    double rel = scale > 0.0 ? std::abs(fd - model) / scale : 0.0;
    if (rel > p.balance_tol) {
        out.reason = "balance";
        return out;
    }
    rec.dE_dt_fd = fd;
    rec.dE_dt_model = model;
    rec.balance_rel = rel;
    rec.step = cur.step + 1;
    state = std::move(next);
    cur = rec;
    out.accepted = true;
    return out;
}

StepOutcome step_rescaled(FlowState& state, Record& cur, double dt, const FlowParams& p, const TargetGeometry& tg)
{
    StepOutcome out;
    double ell0 = state.ell, ell1 = ell0 + dt * cur.ell_dot;
    if (!(ell1 > 0.0) || std::abs(ell1 - ell0) > 0.1 * ell0 ||
        std::abs(std::log(ell1 / ell0)) > p.dlogl_max * (1.0 + 1e-9)) {
        out.reason = "length cap";
        return out;
    }
    SymmetricMap u = state.map;
    auto rr = relax_harmonic(u, ell1, p.d, tg, p.tol_inner, p.inner_max_iter);
    out.newton_iterations = rr.iterations;
    if (!rr.converged) {
        out.reason = "inner-solve failure (tension_norm = " + std::to_string(rr.tension_norm) + ")";
        return out;
    }
    FlowState next{u, ell1, state.t + dt};
    Record rec = evaluate(next, p, tg);
    rec.harmonic = true;
    rec.dE_dt_fd = (rec.E - cur.E) / dt;
    rec.dE_dt_model = 0.5 * (cur.dE_dl + rec.dE_dl) * (ell1 - ell0) / dt;
    double scale = std::abs(rec.dE_dt_model);
    rec.balance_rel = scale > 0.0 ? std::abs(rec.dE_dt_fd - rec.dE_dt_model) / scale : 0.0;
    rec.step = cur.step + 1;
    state = std::move(next);
    cur = rec;
    out.accepted = true;
    return out;
}

FitResult fit_rates(const std::vector<Record>& series, FlowMode mode, double min_span, int min_points)
{
    FitResult fr;
    double lmin = INFINITY, lmax = 0.0;
    auto usable = [&](const Record& r) {
        return r.rate > 0.0 && r.ell > 0.0 && std::isfinite(r.rate) && (mode == FlowMode::Full || r.ell < 1.0);
    };
    for (const auto& r : series)
        if (usable(r)) {
            lmin = std::min(lmin, r.ell);
            lmax = std::max(lmax, r.ell);
        }
    // the final decade of ell only
    std::vector<double> xs, ys;
    for (const auto& r : series) {
        if (!usable(r) || r.ell > min_span * lmin) continue;
        double L = std::log(1.0 / r.ell);
        xs.push_back(mode == FlowMode::Full ? L : std::log(L));
        ys.push_back(std::log(r.rate));
    }
    fr.ell_span = lmax > 0.0 ? lmax / lmin : 0.0;
    fr.points = int(xs.size());
    if (fr.points < min_points || fr.ell_span < min_span) {
        fr.note = "fit unavailable: insufficient dynamic range";
        return fr;
    }
    double n = double(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icept = (sy - slope * sx) / n;
    fr.available = true;
    fr.prefactor = std::exp(icept);
    const auto& last = series.back();
    double L = std::log(1.0 / last.ell);
    if (mode == FlowMode::Full) {
        fr.delta_fit = slope;
        if (slope > 0.0) fr.blowup_time_estimate = last.t + std::exp(-slope * L) / (fr.prefactor * slope);
    } else {
        fr.log_rate_exponent = slope;
        if (slope > 1.0 && L > 0.0) fr.blowup_time_estimate = last.t + std::pow(L, 1.0 - slope) / (fr.prefactor * (slope - 1.0));
    }
    return fr;
}

RunResult run_flow(FlowState init, const FlowParams& p, const TargetGeometry& tg, const RecordSink& sink)
{
    RunResult res;
    res.final_state = init;
    if (!(p.t_max > 0.0)) {
        res.cause = "t_max reached";
        return res;
    }
    FlowState state = std::move(init);
    try {
        if (p.mode == FlowMode::Rescaled) {
            auto rr = relax_harmonic(state.map, state.ell, p.d, tg, p.tol_inner, 4 * p.inner_max_iter);
            if (!rr.converged) {
                res.cause = "inner-solve failure (tension_norm = " + std::to_string(rr.tension_norm) + ")";
                res.final_state = state;
                return res;
            }
        }
        Record cur = evaluate(state, p, tg);
        cur.harmonic = p.mode == FlowMode::Rescaled;
        cur.dE_dt_model = -cur.tension_norm * cur.tension_norm + cur.metric_term;
        cur.dE_dt_fd = cur.dE_dt_model;
        res.series.push_back(cur);
        if (sink) sink(state, cur);
        double dt = p.dt_init;
        int inner_fail = 0;
        for (long step = 0;; ++step) {
            if (state.ell <= p.ell_stop) { res.cause = "ell_stop reached"; break; }
            if (state.t >= p.t_max * (1.0 - 1e-12)) { res.cause = "t_max reached"; break; }
            if (step >= p.max_steps) { res.cause = "max steps reached"; break; }
            double cap = std::min(p.dt_max, p.t_max - state.t);
            if (cur.rate != 0.0) cap = std::min(cap, -0.999 * std::expm1(-p.dlogl_max) / std::abs(cur.rate));
            dt = std::min(dt, cap);
            StepOutcome o = p.mode == FlowMode::Full ? step_full(state, cur, dt, p, tg) : step_rescaled(state, cur, dt, p, tg);
            if (o.accepted) {
                inner_fail = 0;
                res.series.push_back(cur);
                if (sink) sink(state, cur);
                bool smooth = p.mode == FlowMode::Rescaled || cur.balance_rel < p.safety * p.balance_tol;
                dt = smooth ? dt * 1.5 : dt;
            } else {
                ++res.rejected_steps;
                if (o.reason.rfind("inner", 0) == 0 && ++inner_fail > 6) { res.cause = o.reason; break; }
                dt *= 0.5;
                if (dt < p.dt_min) { res.cause = "timestep underflow near degeneration"; break; }
            }
        }
    } catch (const NumericError& e) {
        res.cause = "numeric failure";
    }
    res.final_state = state;
    res.fit = fit_rates(res.series, p.mode);
    return res;
}

}  // namespace tmf
