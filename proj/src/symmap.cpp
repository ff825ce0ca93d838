#include "tmf/symmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tmf {

using std::numbers::pi;

// ---------------------------------------------------------------- mesh

namespace {

double solve_beta(double sigma, double X)
{
    if (X <= sigma) return 0.0;
    double target = sigma / X;
    double lo = 1e-12, hi = 700.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid / std::sinh(mid) > target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> mesh_nodes(int m, double sigma, double X, double* beta_out)
{
    double beta = solve_beta(sigma, X);
    if (beta_out) *beta_out = beta;
    std::vector<double> s(m + 1);
    for (int j = 0; j <= m; ++j) {
        double xi = double(j) / m;
        s[j] = beta < 1e-6 ? X * xi : X * 0.5 * (1.0 + std::tanh(beta * (xi - 0.5)) / std::tanh(0.5 * beta));
    }
    s[0] = 0.0;
    s[m] = X;
    return s;
}

}  // namespace

Mesh make_mesh(int m, double sigma, double X)
{
    if (m < 2) throw DomainError("mesh: need at least two cells");
    Mesh mesh;
    mesh.m = m;
    mesh.X = X;
    mesh.sigma = sigma;
    mesh.s = mesh_nodes(m, sigma, X, &mesh.beta);
    mesh.h.resize(m);
    mesh.w.assign(m + 1, 0.0);
    for (int c = 0; c < m; ++c) {
        mesh.h[c] = mesh.s[c + 1] - mesh.s[c];
        mesh.w[c] += 0.5 * mesh.h[c];
        mesh.w[c + 1] += 0.5 * mesh.h[c];
    }
    return mesh;
}

std::vector<double> mesh_dsdX(int m, double sigma, double X)
{
    double dX = 1e-6 * X;
    auto a = mesh_nodes(m, sigma, X + dX, nullptr);
    auto b = mesh_nodes(m, sigma, X - dX, nullptr);
    std::vector<double> out(m + 1);
    for (int j = 0; j <= m; ++j) out[j] = (a[j] - b[j]) / (2.0 * dX);
    return out;
}

// ---------------------------------------------------------------- state

SymmetricMap::SymmetricMap(int n_, double sigma_, double z0_) : n(n_), sigma(sigma_), z0(z0_)
{
    if (n < 4 || n % 2) throw DomainError("symmetric map: n must be even and >= 4");
    if (!(z0 > 1.0)) throw DomainError("symmetric map: z0 must exceed 1");
    v.assign(m() + 1, 0.0);
    r.assign(m() + 1, 0.0);
    z.assign(m() + 1, 0.0);
    enforce_boundary();
}

void SymmetricMap::enforce_boundary()
{
    int mm = m();
    v[mm] = -v_ref;
    r[mm] = r0;
    z[mm] = z0;
    z[0] = 0.0;
}

void SymmetricMap::check_finite() const
{
    for (int j = 0; j <= m(); ++j)
        if (!std::isfinite(v[j]) || !std::isfinite(r[j]) || !std::isfinite(z[j]))
            throw NumericError("numeric failure: non-finite map value");
}

std::vector<double> SymmetricMap::v_values() const
{
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v_ref + v[j];
    return out;
}

void SymmetricMap::rebase()
{
    double shift = v[0];
    v_ref += shift;
    for (double& x : v) x -= shift;
    v.back() = -v_ref;
}

Frame make_frame(const SymmetricMap& u, double ell, double d)
{
    Frame fr;
    fr.metric = CollarMetric::cylinder(ell, d);
    fr.mesh = make_mesh(u.m(), u.sigma, fr.metric.X);
    int m = u.m();
    fr.rho2.resize(m + 1);
    for (int j = 0; j <= m; ++j) {
        double rho = fr.metric.rho(fr.mesh.s[j]);
        fr.rho2[j] = rho * rho;
    }
    fr.cellW.resize(m);
    double sum = 0.0;
    for (int c = 0; c < m; ++c) {
        fr.cellW[c] = rho_inv2_integral(ell, fr.mesh.s[c], fr.mesh.s[c + 1]);
        sum += fr.cellW[c];
    }
    fr.W = 4.0 * pi * sum;
    return fr;
}

double energy(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg)
{
    double E = energy_gradient<double>(fr.mesh, tg, u.v, u.r, u.z, nullptr, nullptr, nullptr, u.v_ref);
    if (!std::isfinite(E)) throw NumericError("numeric failure: energy is not finite");
    return E;
}

// ---------------------------------------------------------------- observables

namespace {

std::vector<double> node_K(const SymmetricMap& u, const TargetGeometry& tg)
{
    std::vector<double> K(u.m() + 1);
    for (int j = 0; j <= u.m(); ++j) K[j] = tg.K(u.v_abs(j), u.r[j], u.z[j]);
    return K;
}

}  // namespace

Hopf hopf(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg)
{
    const int m = u.m();
    auto K = node_K(u, tg);
    Hopf out;
    out.psi_cell.resize(m);
    double I = 0.0, mean = 0.0;
    for (int c = 0; c < m; ++c) {
        double h = fr.mesh.h[c];
        double dv = (u.v[c + 1] - u.v[c]) / h, dr = (u.r[c + 1] - u.r[c]) / h, dz = (u.z[c + 1] - u.z[c]) / h;
        double A = 0.5 * (K[c] + K[c + 1]);
        double e = dv * dv + A * (dr * dr + dz * dz) -
                   0.5 * (K[c] * u.r[c] * u.r[c] + K[c + 1] * u.r[c + 1] * u.r[c + 1]);
        out.psi_cell[c] = 2.0 * pi * e;
        I += e * fr.cellW[c];
        mean += out.psi_cell[c] * h;
    }
    out.I = 4.0 * pi * I;
    out.W = fr.W;
    out.b0 = out.I / out.W;
    double X = fr.mesh.X;
    out.psi_mean = mean / X;
    double var = 0.0;
    for (int c = 0; c < m; ++c) var += std::pow(out.psi_cell[c] - out.psi_mean, 2) * fr.mesh.h[c];
    out.psi_std = std::sqrt(var / X);
    out.psi_node.resize(m + 1);
    out.psi_node[0] = out.psi_cell[0];
    out.psi_node[m] = out.psi_cell[m - 1];
    for (int j = 1; j < m; ++j) {
        double h1 = fr.mesh.h[j - 1], h2 = fr.mesh.h[j];
        out.psi_node[j] = (h1 * out.psi_cell[j - 1] + h2 * out.psi_cell[j]) / (h1 + h2);
    }
    return out;
}

std::vector<double> angular_energy(const SymmetricMap& u, const TargetGeometry& tg)
{
    auto K = node_K(u, tg);
    std::vector<double> th(u.m() + 1);
    for (int j = 0; j <= u.m(); ++j) th[j] = 2.0 * pi * K[j] * u.r[j] * u.r[j];
    return th;
}

double leash(const SymmetricMap& u, const TargetGeometry& tg)
{
    auto K = node_K(u, tg);
    double L = 0.0;
    for (int c = 0; c < u.m(); ++c) {
        double dv = u.v[c + 1] - u.v[c], dr = u.r[c + 1] - u.r[c], dz = u.z[c + 1] - u.z[c];
        L += std::sqrt(dv * dv + 0.5 * (K[c] + K[c + 1]) * (dr * dr + dz * dz));
    }
    return 2.0 * L;
}

double v_max(const SymmetricMap& u) { return u.v_ref + *std::max_element(u.v.begin(), u.v.end()); }

double area_w(const SymmetricMap& u, const TargetGeometry& tg)
{
    double A = 0.0;
    for (int c = 0; c < u.m(); ++c) {
        double dr = u.r[c + 1] - u.r[c], dz = u.z[c + 1] - u.z[c];
        double P0 = tg.bump.factor_q(u.r[c] * u.r[c] + u.z[c] * u.z[c]);
        double P1 = tg.bump.factor_q(u.r[c + 1] * u.r[c + 1] + u.z[c + 1] * u.z[c + 1]);
        A += 0.5 * (P0 + P1) * 0.5 * (u.r[c] + u.r[c + 1]) * std::sqrt(dr * dr + dz * dz);
    }
    return 4.0 * pi * A;
}

double central_w_energy(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg, double a)
{
    double E = 0.0;
    for (int c = 0; c < u.m(); ++c) {
        double s0 = fr.mesh.s[c], s1 = fr.mesh.s[c + 1];
        if (s0 >= a) break;
        double frac = std::min(1.0, (a - s0) / (s1 - s0));
        double h = s1 - s0;
        double dr = u.r[c + 1] - u.r[c], dz = u.z[c + 1] - u.z[c];
        double P0 = tg.bump.factor_q(u.r[c] * u.r[c] + u.z[c] * u.z[c]);
        double P1 = tg.bump.factor_q(u.r[c + 1] * u.r[c + 1] + u.z[c + 1] * u.z[c + 1]);
        double cell = 0.5 * (P0 + P1) * (dr * dr + dz * dz) / h +
                      0.5 * h * (P0 * u.r[c] * u.r[c] + P1 * u.r[c + 1] * u.r[c + 1]);
        E += frac * cell;
    }
    return 2.0 * pi * E;
}

double min_v_central(const SymmetricMap& u, const Frame& fr, double a)
{
    double mn = u.v[0];
    for (int c = 0; c < u.m(); ++c) {
        double s0 = fr.mesh.s[c], s1 = fr.mesh.s[c + 1];
        if (s0 >= a) break;
        double t = std::min(1.0, (a - s0) / (s1 - s0));
        mn = std::min({mn, u.v[c], u.v[c] + t * (u.v[c + 1] - u.v[c])});
    }
    return u.v_ref + mn;
}

bool disjointness_check(const SymmetricMap& u, const TargetGeometry& tg, double tol)
{
    for (int j = 0; j <= u.m(); ++j) {
        double rad = std::hypot(u.r[j], u.z[j]);
        double ang = std::atan2(u.r[j], u.z[j]);
        if (std::abs(rad - tg.radii.r_max) <= tol && ang >= pi / 4 - 1e-12 && ang <= 3 * pi / 4 + 1e-12) return false;
    }
    return true;
}

Tension tension(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg)
{
    const int m = u.m();
    Tension t;
    energy_gradient<double>(fr.mesh, tg, u.v, u.r, u.z, &t.gv, &t.gr, &t.gz, u.v_ref);
    auto K = node_K(u, tg);
    t.tv.assign(m + 1, 0.0);
    t.tr.assign(m + 1, 0.0);
    t.tz.assign(m + 1, 0.0);
    t.mv.assign(m + 1, 0.0);
    t.mr.assign(m + 1, 0.0);
    t.mz.assign(m + 1, 0.0);
    double n2 = 0.0;
    for (int j = 0; j < m; ++j) {
        double M = 4.0 * pi * fr.rho2[j] * fr.mesh.w[j];
        if (!(M > 0.0) || !(K[j] > 0.0)) throw NumericError("tension: singular mass entry");
        t.mv[j] = M;
        t.mr[j] = M * K[j];
        t.mz[j] = M * K[j];
        t.tv[j] = -t.gv[j] / t.mv[j];
        t.tr[j] = -t.gr[j] / t.mr[j];
        n2 += t.gv[j] * t.gv[j] / t.mv[j] + t.gr[j] * t.gr[j] / t.mr[j];
        if (j > 0) {
            t.tz[j] = -t.gz[j] / t.mz[j];
            n2 += t.gz[j] * t.gz[j] / t.mz[j];
        }
    }
    t.norm = std::sqrt(n2);
    return t;
}

// ---------------------------------------------------------------- horizontal deformation

std::vector<double> mesh_derivative(const Mesh& mesh, const std::vector<double>& a)
{
    const int m = mesh.m;
    std::vector<double> d(m + 1, 0.0);
    for (int j = 1; j < m; ++j) {
        double h1 = mesh.h[j - 1], h2 = mesh.h[j];
        d[j] = (h1 * h1 * (a[j + 1] - a[j]) + h2 * h2 * (a[j] - a[j - 1])) / (h1 * h2 * (h1 + h2));
    }
    return d;
}

HorizontalDirection horizontal_direction(const SymmetricMap& u, double ell, double d)
{
    const int m = u.m();
    double X = collar_width(ell, CollarVariant::Cylinder, d);
    auto mesh = make_mesh(m, u.sigma, X);
    auto dsdX = mesh_dsdX(m, u.sigma, X);
    double dXdl = dcollar_width_dell(ell, d);
    HorizontalDirection hd;
    hd.dsdl.resize(m + 1);
    hd.coef.resize(m + 1);
    for (int j = 0; j <= m; ++j) {
        double s = mesh.s[j];
        hd.dsdl[j] = dsdX[j] * dXdl;
        hd.coef[j] = hd.dsdl[j] + (s + pi / ell * std::sin(ell * s / pi)) / ell;
    }
    hd.coef[0] = 0.0;
    hd.coef[m] = 0.0;
    return hd;
}

double horizontal_energy_derivative(const SymmetricMap& u, double ell, double d, const TargetGeometry& tg)
{
    const int m = u.m();
    double X = collar_width(ell, CollarVariant::Cylinder, d);
    auto mesh = make_mesh(m, u.sigma, X);
    auto hd = horizontal_direction(u, ell, d);
    auto Dv = mesh_derivative(mesh, u.v), Dr = mesh_derivative(mesh, u.r), Dz = mesh_derivative(mesh, u.z);
    double eps = 1e-5 * ell;
    double Es[2];
    for (int k = 0; k < 2; ++k) {
        double sg = k == 0 ? 1.0 : -1.0;
        auto mk = make_mesh(m, u.sigma, collar_width(ell + sg * eps, CollarVariant::Cylinder, d));
        std::vector<double> v = u.v, r = u.r, z = u.z;
        for (int j = 1; j < m; ++j) {
            v[j] += sg * eps * hd.coef[j] * Dv[j];
            r[j] += sg * eps * hd.coef[j] * Dr[j];
            z[j] += sg * eps * hd.coef[j] * Dz[j];
        }
        Es[k] = energy_gradient<double>(mk, tg, v, r, z, nullptr, nullptr, nullptr, u.v_ref);
    }
    return (Es[0] - Es[1]) / (2.0 * eps);
}

double variational_b0(const SymmetricMap& u, double ell, double d, const TargetGeometry& tg)
{
    double X = collar_width(ell, CollarVariant::Cylinder, d);
    double W = 2.0 * pi * rho_inv2_integral(ell, -X, X);
    return 4.0 * pi * pi * horizontal_energy_derivative(u, ell, d, tg) / (ell * W);
}

// ---------------------------------------------------------------- region sets

std::vector<double> window_energies(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg,
                                    const std::vector<double>& s_full)
{
    const int m = u.m();
    auto K = node_K(u, tg);
    // cumulative energy from -X along the full collar, linear within cells
    std::vector<double> xs(2 * m + 1), C(2 * m + 1, 0.0);
    std::vector<double> cell(m);
    for (int c = 0; c < m; ++c) {
        double h = fr.mesh.h[c];
        double dv = u.v[c + 1] - u.v[c], dr = u.r[c + 1] - u.r[c], dz = u.z[c + 1] - u.z[c];
        double A = 0.5 * (K[c] + K[c + 1]);
        cell[c] = pi * ((dv * dv + A * (dr * dr + dz * dz)) / h +
                        0.5 * h * (K[c] * u.r[c] * u.r[c] + K[c + 1] * u.r[c + 1] * u.r[c + 1]));
    }
    for (int j = 0; j <= 2 * m; ++j) xs[j] = j < m ? -fr.mesh.s[m - j] : fr.mesh.s[j - m];
    for (int j = 1; j <= 2 * m; ++j) {
        int c = j <= m ? m - j : j - m - 1;
        C[j] = C[j - 1] + cell[c];
    }
    auto cum = [&](double s) {
        if (s <= xs.front()) return 0.0;
        if (s >= xs.back()) return C.back();
        auto it = std::upper_bound(xs.begin(), xs.end(), s);
        std::size_t i = std::size_t(it - xs.begin()) - 1;
        double t = (s - xs[i]) / (xs[i + 1] - xs[i]);
        return C[i] + t * (C[i + 1] - C[i]);
    };
    std::vector<double> out(s_full.size());
    for (std::size_t i = 0; i < s_full.size(); ++i) out[i] = cum(s_full[i] + 1.0) - cum(s_full[i] - 1.0);
    return out;
}

RegionSets region_sets(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg, double eps0)
{
    const double X = fr.mesh.X;
    if (X < 2.0) throw DomainError("region_sets: collar too short for the decomposition (X < 2)");
    const int m = u.m();
    RegionSets rs;
    rs.eps0 = eps0;
    rs.E_total = energy(u, fr, tg);
    // nodes of the full collar plus the end-band edges
    for (int j = m; j >= 1; --j) rs.s.push_back(-fr.mesh.s[j]);
    for (int j = 0; j <= m; ++j) rs.s.push_back(fr.mesh.s[j]);
    rs.s.push_back(X - 1.0);
    rs.s.push_back(-(X - 1.0));
    std::sort(rs.s.begin(), rs.s.end());
    rs.s.erase(std::unique(rs.s.begin(), rs.s.end()), rs.s.end());
    const std::size_t N = rs.s.size();
    auto win = window_energies(u, fr, tg, rs.s);
    rs.inA.resize(N);
    for (std::size_t i = 0; i < N; ++i)
        rs.inA[i] = std::abs(rs.s[i]) >= X - 1.0 || win[i] >= eps0;
    std::vector<double> dist(N, INFINITY);
    double last = -INFINITY;
    for (std::size_t i = 0; i < N; ++i) {
        if (rs.inA[i]) last = rs.s[i];
        dist[i] = rs.s[i] - last;
    }
    last = INFINITY;
    for (std::size_t i = N; i-- > 0;) {
        if (rs.inA[i]) last = rs.s[i];
        dist[i] = std::min(dist[i], last - rs.s[i]);
    }
    const auto& cm = fr.metric;
    auto gB = [&](std::size_t i) { return dist[i] - 4.0 * std::log(1.0 / cm.rho(rs.s[i])) - 2.0; };
    double thr_t = 4.0 * std::log(1.0 / cm.ell) + 2.0;
    rs.inB.resize(N);
    rs.inBt.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        rs.inB[i] = gB(i) >= 0.0;
        rs.inBt[i] = dist[i] >= thr_t;
    }
    for (std::size_t i = 0; i < N;) {
        if (rs.inB[i]) { ++i; continue; }
        std::size_t j = i;
        while (j + 1 < N && !rs.inB[j + 1]) ++j;
        Component c;
        c.s_lo = rs.s[i];
        c.s_hi = rs.s[j];
        if (i > 0) {
            double g0 = gB(i - 1), g1 = gB(i);
            c.s_lo = rs.s[i - 1] + (rs.s[i] - rs.s[i - 1]) * g0 / (g0 - g1);
        }
        if (j + 1 < N) {
            double g0 = gB(j), g1 = gB(j + 1);
            c.s_hi = rs.s[j] + (rs.s[j + 1] - rs.s[j]) * g0 / (g0 - g1);
        }
        c.length = c.s_hi - c.s_lo;
        double amin = (c.s_lo <= 0.0 && c.s_hi >= 0.0) ? 0.0 : std::min(std::abs(c.s_lo), std::abs(c.s_hi));
        double amax = std::max(std::abs(c.s_lo), std::abs(c.s_hi));
        c.sup_log_rho_inv = std::log(1.0 / cm.rho(amin));
        c.rho_ratio = cm.rho(std::min(amax, X)) / cm.rho(amin);
        rs.max_rho_ratio = std::max(rs.max_rho_ratio, c.rho_ratio);
        rs.components.push_back(c);
        i = j + 1;
    }
    double bound = rs.E_total / eps0 + 2.0;
    rs.count_ok = double(rs.components.size()) <= bound;
    rs.length_ok = true;
    for (auto& c : rs.components)
        if (c.length > 8.0 * bound * (c.sup_log_rho_inv + 1.0)) rs.length_ok = false;
    return rs;
}

}  // namespace tmf
