#pragma once

#include "tmf/symmap.hpp"

#include <string>
#include <vector>

namespace tmf {

struct InitialDataSpec {
    double eps = 1e-3;
    double z0 = 1.2;
    double ell0 = 0.0;     // 0 selects ell0 by bisection on the energy budget
    double ell_bar = 0.5;  // upper bound for the selected ell0
    double slack = 0.3;    // selected ell0 leaves E <= 10 pi - slack
    double ramp_tau = 0.1; // fraction of the v ramp spent accelerating
    double d = 1.0;
    int n = 2048;
    double sigma = 16.0;
};

double lambda1(double eps);  // tanh(Lambda1 - 1) = 1 - eps^2 / 2
double lambda2(double eps);  // 1 + log(1 / (4 eps))

struct PieceEnergy {
    std::string name;
    double s_lo = 0.0, s_hi = 0.0;
    double energy = 0.0;
    double budget = 0.0;
    bool ok = false;
};

struct BudgetReport {
    std::vector<PieceEnergy> pieces;
    double total = 0.0;
    double bound = 0.0;  // 10 pi
    double sphere_energy = 0.0;
    double sphere_rel_err = 0.0;  // against 8 pi
    double min_norm_w = 0.0;
    bool ok = false;
    std::string overweight;  // first piece over its budget
};

struct InitialData {
    SymmetricMap map;
    double ell0 = 0.0;
    double Lambda1 = 0.0, Lambda2 = 0.0;
    double v_star = 0.0;
    BudgetReport budget;
};

// nodal values of the sphere / leash / annulus map on the mesh of X(ell)
SymmetricMap assemble_initial(const InitialDataSpec& spec, const TargetGeometry& tg, double ell);

BudgetReport certify_budget(const SymmetricMap& u, double ell, const TargetGeometry& tg, const InitialDataSpec& spec);

InitialData build_initial(const InitialDataSpec& spec, const TargetGeometry& tg);

}  // namespace tmf
