#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tmf {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class CollarVariant { Closed, Cylinder };

// Hyperbolic collar [-X, X] x S^1 with metric rho^2 (ds^2 + dtheta^2).
struct CollarMetric {
    double ell = 1.0;
    CollarVariant variant = CollarVariant::Cylinder;
    double d = 1.0;
    double X = 0.0;

    CollarMetric() = default;
    CollarMetric(double ell, CollarVariant variant, double d = 1.0);

    static CollarMetric cylinder(double ell, double d = 1.0) { return {ell, CollarVariant::Cylinder, d}; }
    static CollarMetric closed(double ell) { return {ell, CollarVariant::Closed, 1.0}; }

    double rho(double s) const;
    double rho_inv2(double s) const;
    double dlogrho(double s) const;
};

double collar_width(double ell, CollarVariant variant, double d = 1.0);
double dcollar_width_dell(double ell, double d = 1.0);

double conformal_factor(const CollarMetric& m, double s);
double thin_part_width(double ell, double eps);
double injectivity_radius(const CollarMetric& m, double s);

// Exact integral of rho^-2 over [a, b].
double rho_inv2_integral(double ell, double a, double b);

struct CollarBoundReport {
    double int_sqrt_rho = 0.0;
    double int_sqrt_rho_bound = 0.0;
    double sqrt_rho_margin = 0.0;
    // worst value of 2 pi rho(s) - Area([0,s] x S^1) over the probe points
    double area_margin = 0.0;
    std::vector<double> probes;
    bool ok = false;
};

CollarBoundReport collar_bound_report(const CollarMetric& m, int probes = 64);

}  // namespace tmf
