#pragma once

#include "tmf/flow.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tmf {

struct MonitorConfig {
    double eps0 = 0.05;
    double eps1 = 10.0;   // tension gate
    double c0 = 1.0;
    double C1 = 10.0;
    double C2 = 1.0;      // psi upper constant
    double c1 = 1e-2;     // psi lower constant
    double delta = 0.5;
    double ell_bar = 0.5;
    double E0 = 31.415926535897931;  // 10 pi

    // empty when valid
    std::vector<std::string> violations() const;
};

// tri-state outcome; nullopt is "n/a"
using Flag = std::optional<bool>;
std::string flag_name(const Flag& f);

struct Thm1Result {
    bool hyp_i = false;
    Flag hyp_ii;
    double margin = 0.0;  // L * ell^((1+delta)/4)
};

Thm1Result thm1_monitor(const Record& r, const MonitorConfig& c);

enum class Regime { Bounded, Stretching, Indeterminate };
std::string regime_name(Regime r);

struct Thm2Result {
    Regime regime = Regime::Indeterminate;
    double ratio_bounded = 0.0;     // L / (log 1/ell)^(1/2)
    double ratio_stretching = 0.0;  // L / (log 1/ell)^((1+delta)/2)
};

Thm2Result thm2_monitor(const Record& r, const MonitorConfig& c);

struct PsiBoundsResult {
    Flag upper_ok, lower_ok;
    double ratio_upper = 0.0;  // psi / (ell^2 (log 1/ell + 1))
    double ratio_lower = 0.0;  // psi / (ell^2 (log 1/ell)^(1+delta))
};

// psi is taken as the mean of the Hopf function; tol is the inner tolerance
PsiBoundsResult psi_bounds_check(const Record& r, const MonitorConfig& c, double tol);

struct ChainResult {
    bool applicable = false;  // X >= 8
    bool ell_ok = false, central_ok = false, min_v_ok = false;
    bool area_ok = false, disjoint_ok = false, v_max_ok = false;
    double v_max_ratio = 0.0;  // v_max * ell^((1+delta)/4), or v_max / log(1/ell) for exp
    bool ok() const { return !applicable || (ell_ok && central_ok && min_v_ok && area_ok && disjoint_ok && v_max_ok); }
    std::string first_violation() const;
};

ChainResult collar_chain(const Record& r, const TargetGeometry& tg, const MonitorConfig& c);

struct RegionCheck {
    bool count_ok = false, length_ok = false, rho_ok = false;
    bool ok() const { return count_ok && length_ok && rho_ok; }
};

RegionCheck region_check(const RegionSets& rs);

// running aggregates over a run, in record order
struct MonitorSummary {
    long records = 0;
    long thm1_i_true = 0;
    long thm1_ii_true = 0, thm1_ii_false = 0, thm1_ii_na = 0;
    long bounded = 0, stretching = 0, indeterminate = 0;
    double min_thm1_margin = 0.0;
    long psi_upper_false = 0, psi_lower_false = 0;
    double max_ratio_upper = 0.0, min_ratio_lower = 0.0;
    long chain_applicable = 0, chain_violations = 0;
    std::string first_chain_violation;
    double min_v_max_ratio = 0.0;
    long leash_violations = 0;  // L < 2 v_max
    // ell below which thm1 (ii) held at every later gated record
    std::optional<double> degeneration_threshold;

    void add(const Record& r, const TargetGeometry& tg, const MonitorConfig& c, double tol);
    void finish(const std::vector<Record>& series, const MonitorConfig& c);
};

}  // namespace tmf
