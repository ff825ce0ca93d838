#pragma once

#include "tmf/collar.hpp"
#include "tmf/target.hpp"

#include <complex>
#include <vector>

namespace tmf {

// Half-collar mesh s_j = X phi(j/m), phi a symmetric tanh stretch whose spacing at
// both s = 0 and s = X is sigma/m.
struct Mesh {
    int m = 0;
    double X = 0.0;
    double sigma = 16.0;
    double beta = 0.0;
    std::vector<double> s;  // m+1 nodes
    std::vector<double> h;  // m cells
    std::vector<double> w;  // nodal quadrature weights
};

Mesh make_mesh(int m, double sigma, double X);
// ds_j/dX at fixed computational coordinate
std::vector<double> mesh_dsdX(int m, double sigma, double X);

struct SymmetricMap {
    int n = 2048;          // full grid intervals; nodes j = 0..n/2 stored, j = 0 at s = 0
    double sigma = 16.0;
    double z0 = 1.2;
    double r0 = 0.25;
    double v_ref = 0.0;  // v at node j is v_ref + v[j]
    std::vector<double> v, r, z;

    SymmetricMap() = default;
    SymmetricMap(int n, double sigma, double z0);
    int m() const { return n / 2; }
    void enforce_boundary();
    void check_finite() const;
    double v_abs(int j) const { return v_ref + v[j]; }
    std::vector<double> v_values() const;
    // move v[0] into v_ref so that values near the centre carry full relative precision
    void rebase();
};

struct Frame {
    CollarMetric metric;
    Mesh mesh;
    std::vector<double> rho2;   // rho^2 at nodes
    std::vector<double> cellW;  // exact int rho^-2 over each cell
    double W = 0.0;             // int int rho^-2 over the full collar
};

Frame make_frame(const SymmetricMap& u, double ell, double d = 1.0);

// Discrete energy E = 2 pi [ sum_c (dv^2 + A_c (dr^2 + dz^2)) / h_c + sum_j w_j K_j r_j^2 ]
// with K = f(v) P(|w|^2) and A_c the cell average of K. The gradient is exact for this sum.
template <class T>
T energy_gradient(const Mesh& mesh, const TargetGeometry& tg, const std::vector<T>& v, const std::vector<T>& r,
                  const std::vector<T>& z, std::vector<T>* gv, std::vector<T>* gr, std::vector<T>* gz,
                  double v_ref = 0.0);

double energy(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg);

struct Hopf {
    std::vector<double> psi_cell;  // 2 pi (|u_s|^2 - |u_theta|^2) per cell
    std::vector<double> psi_node;
    double psi_mean = 0.0;
    double psi_std = 0.0;
    double I = 0.0;  // int int (|u_s|^2 - |u_theta|^2) rho^-2
    double W = 0.0;
    double b0 = 0.0;
};

Hopf hopf(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg);

std::vector<double> angular_energy(const SymmetricMap& u, const TargetGeometry& tg);
double leash(const SymmetricMap& u, const TargetGeometry& tg);
double v_max(const SymmetricMap& u);
double area_w(const SymmetricMap& u, const TargetGeometry& tg);
// pi int_{|s|<=a} P (r_s^2 + z_s^2 + r^2) ds, energy of w in the bump metric
double central_w_energy(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg, double a = 8.0);
double min_v_central(const SymmetricMap& u, const Frame& fr, double a = 8.0);
bool disjointness_check(const SymmetricMap& u, const TargetGeometry& tg, double tol = 1e-3);

struct Tension {
    std::vector<double> tv, tr, tz;   // tau per node
    std::vector<double> gv, gr, gz;   // dE per node
    std::vector<double> mv, mr, mz;   // mass per node
    double norm = 0.0;
};

Tension tension(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg);

// centred nonuniform first derivative at interior nodes (zero at j = 0 and m)
std::vector<double> mesh_derivative(const Mesh& mesh, const std::vector<double>& a);

// Transport rate of nodal values per unit ell-rate under the horizontal metric
// deformation: a_j = (ds_j/dell - zeta(s_j)/ell') u_s(s_j).
struct HorizontalDirection {
    std::vector<double> dsdl;
    std::vector<double> coef;  // ds_j/dell + (s_j + (pi/ell) sin(ell s_j / pi)) / ell
};

HorizontalDirection horizontal_direction(const SymmetricMap& u, double ell, double d);

// dE/dell along the horizontal deformation, by central differences in ell
double horizontal_energy_derivative(const SymmetricMap& u, double ell, double d, const TargetGeometry& tg);

// b0 consistent with the discrete energy: 4 pi^2 (dE/dell)_hor / (ell W)
double variational_b0(const SymmetricMap& u, double ell, double d, const TargetGeometry& tg);

struct Component {
    double s_lo = 0.0, s_hi = 0.0;
    double length = 0.0;
    double sup_log_rho_inv = 0.0;
    double rho_ratio = 1.0;  // sup rho / inf rho
};

struct RegionSets {
    std::vector<double> s;      // sample points on [-X, X]
    std::vector<char> inA, inB, inBt;
    std::vector<Component> components;  // of the complement of B
    double E_total = 0.0;
    double eps0 = 0.05;
    bool count_ok = false;
    bool length_ok = false;
    double max_rho_ratio = 1.0;
};

RegionSets region_sets(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg, double eps0);

// explicit 2 pi-weighted window energies E(u; [s-1, s+1] x S^1) at the sample points
std::vector<double> window_energies(const SymmetricMap& u, const Frame& fr, const TargetGeometry& tg,
                                    const std::vector<double>& s_full);

// ---- template definition

template <class T>
T energy_gradient(const Mesh& mesh, const TargetGeometry& tg, const std::vector<T>& v, const std::vector<T>& r,
                  const std::vector<T>& z, std::vector<T>* gv, std::vector<T>* gr, std::vector<T>* gz,
                  double v_ref)
{
    constexpr double two_pi = 6.283185307179586476925286766559;
    const int m = mesh.m;
    std::vector<T> K(m + 1), Kv(m + 1), Kr(m + 1), Kz(m + 1);
    for (int j = 0; j <= m; ++j) {
        T q = r[j] * r[j] + z[j] * z[j];
        T P = tg.bump.factor_q(q), dP = tg.bump.dfactor_q(q);
        T va = v[j] + v_ref;
        T f = tg.warping.f(va), df = tg.warping.df(va);
        K[j] = f * P;
        Kv[j] = df * P;
        Kr[j] = 2.0 * f * dP * r[j];
        Kz[j] = 2.0 * f * dP * z[j];
    }
    const bool grad = gv != nullptr;
    if (grad) {
        gv->assign(m + 1, T(0.0));
        gr->assign(m + 1, T(0.0));
        gz->assign(m + 1, T(0.0));
    }
    T E = 0.0;
    for (int c = 0; c < m; ++c) {
        double h = mesh.h[c];
        T dv = v[c + 1] - v[c], dr = r[c + 1] - r[c], dz = z[c + 1] - z[c];
        T A = 0.5 * (K[c] + K[c + 1]);
        T Q = (dr * dr + dz * dz) / h;
        E += dv * dv / h + A * Q;
        if (grad) {
            T a = 2.0 * dv / h, b = 2.0 * A * dr / h, e = 2.0 * A * dz / h;
            (*gv)[c] -= a; (*gv)[c + 1] += a;
            (*gr)[c] -= b; (*gr)[c + 1] += b;
            (*gz)[c] -= e; (*gz)[c + 1] += e;
            for (int k : {c, c + 1}) {
                (*gv)[k] += 0.5 * Q * Kv[k];
                (*gr)[k] += 0.5 * Q * Kr[k];
                (*gz)[k] += 0.5 * Q * Kz[k];
            }
        }
    }
    for (int j = 0; j <= m; ++j) {
        T r2 = r[j] * r[j];
        E += mesh.w[j] * K[j] * r2;
        if (grad) {
            (*gv)[j] += mesh.w[j] * Kv[j] * r2;
            (*gr)[j] += mesh.w[j] * (Kr[j] * r2 + 2.0 * K[j] * r[j]);
            (*gz)[j] += mesh.w[j] * Kz[j] * r2;
        }
    }
    if (grad)
        for (int j = 0; j <= m; ++j) {
            (*gv)[j] *= two_pi;
            (*gr)[j] *= two_pi;
            (*gz)[j] *= two_pi;
        }
    return two_pi * E;
}

}  // namespace tmf
