#pragma once

#include "tmf/symmap.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tmf {

enum class FlowMode { Full, Rescaled };

struct FlowParams {
    FlowMode mode = FlowMode::Full;
    double eta = 1.0;
    double d = 1.0;
    double dt_init = 1e-6;
    double dt_min = 1e-14;
    double dt_max = 1.0;
    double safety = 0.5;          // fraction of the balance tolerance targeted by the controller
    double balance_tol = 3e-3;    // per-step energy-balance acceptance threshold (relative)
    double energy_tol = 1e-8;     // allowed per-step energy rise relative to E0
    double dlogl_max = 0.02;      // cap on |d log ell| per step
    double tol_inner = 1e-7;
    int inner_max_iter = 400;
    double ell_stop = 1e-4;
    double t_max = 1.0;
    long max_steps = 200000;
};

struct FlowState {
    SymmetricMap map;
    double ell = 0.1;
    double t = 0.0;
};

struct Record {
    long step = 0;
    double t = 0.0, ell = 0.0, X = 0.0;
    double E = 0.0;
    double psi_mean = 0.0, psi_std = 0.0;
    double b0 = 0.0;       // drives the length ODE
    double b0_hopf = 0.0;  // rho^-2 weighted mean of the Hopf function
    double I = 0.0;
    double L_leash = 0.0, v_max = 0.0;
    double tension_norm = 0.0;
    double dE_dl = 0.0;         // along the horizontal deformation
    double ell_dot = 0.0;
    double rate = 0.0;          // d/dt log(1/ell)
    double metric_term = 0.0;   // (dE/dl) ell_dot
    double dE_dt_fd = 0.0, dE_dt_model = 0.0, balance_rel = 0.0;
    double area_w = 0.0, central_w = 0.0, min_v_central = 0.0;
    bool disjoint = true;
    bool harmonic = false;
};

double length_ode_rhs(double b0, double ell, const FlowParams& p);

// observables of a state; dt-independent part of a record
Record evaluate(const FlowState& s, const FlowParams& p, const TargetGeometry& tg);

struct RelaxResult {
    bool converged = false;
    int iterations = 0;
    double tension_norm = 0.0;
    double E = 0.0;
};

// Pseudo-transient Newton continuation of the map-only heat flow at frozen ell.
RelaxResult relax_harmonic(SymmetricMap& u, double ell, double d, const TargetGeometry& tg, double tol,
                           int max_iter = 400);

struct StepOutcome {
    bool accepted = false;
    std::string reason;
    int newton_iterations = 0;
};

// One backward-Euler step of the coupled flow in the horizontal gauge; on acceptance
// `state` and `cur` advance and `cur` carries the step's balance data.
StepOutcome step_full(FlowState& state, Record& cur, double dt, const FlowParams& p, const TargetGeometry& tg);

// One explicit length step followed by harmonic re-relaxation.
StepOutcome step_rescaled(FlowState& state, Record& cur, double dt, const FlowParams& p, const TargetGeometry& tg);

struct FitResult {
    bool available = false;
    std::string note;
    double delta_fit = std::numeric_limits<double>::quiet_NaN();
    double log_rate_exponent = std::numeric_limits<double>::quiet_NaN();
    double prefactor = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> blowup_time_estimate;
    double ell_span = 0.0;
    int points = 0;
};

// Least squares of log rate over the final decade of ell (ell <= min_span * min ell).
// mode selects the regressor: log(1/ell) for full mode, log log(1/ell) for rescaled
FitResult fit_rates(const std::vector<Record>& series, FlowMode mode, double min_span = 10.0, int min_points = 20);

struct RunResult {
    std::vector<Record> series;
    std::string cause;
    FitResult fit;
    FlowState final_state;
    long rejected_steps = 0;
};

using RecordSink = std::function<void(const FlowState&, const Record&)>;

RunResult run_flow(FlowState init, const FlowParams& p, const TargetGeometry& tg, const RecordSink& sink = {});

}  // namespace tmf
