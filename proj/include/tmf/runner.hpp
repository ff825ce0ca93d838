#pragma once

#include "tmf/diagnostics.hpp"
#include "tmf/flow.hpp"
#include "tmf/initial.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tmf {

inline constexpr int kSummarySchemaVersion = 1;

struct RunConfig {
    double C_N = 1e6;
    WarpParams warp;
    FlowParams flow;
    InitialDataSpec initial;
    std::string import_path;  // snapshot table replacing the constructed data
    MonitorConfig monitor;
    std::string out_dir = "out";
    long snapshot_every = 0;  // accepted records between snapshots; 0 writes none
    unsigned long seed = 0;
};

struct ParseResult {
    RunConfig config;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

// one `section.key = value` per line, `#` starts a comment; later lines override `base`
ParseResult parse_config(const std::string& text, const RunConfig& base = {});
ParseResult load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& c);
bool operator==(const RunConfig& a, const RunConfig& b);

// cross-field and range checks; each entry names its key
std::vector<std::string> validate(const RunConfig& c);

struct SweepRun {
    std::string name;
    std::string overrides;
    int first_line = 0;
};

// `[run NAME]` headers, each followed by override lines
std::vector<SweepRun> parse_sweep(const std::string& text);

struct RunOutput {
    InitialData initial;
    RunResult run;
    MonitorSummary monitors;
};

// builds the target and initial data, integrates and evaluates the monitors
RunOutput simulate(const RunConfig& cfg, const RecordSink& sink = {});

// simulate and write series.csv, summary.json and snapshots into dir
RunOutput execute_to(const RunConfig& cfg, const std::filesystem::path& dir);

// as execute_to, but failures become error.json and a nonzero status
int execute(const RunConfig& cfg, const std::filesystem::path& dir);

int execute_sweep(const RunConfig& base, const std::vector<SweepRun>& runs, const std::filesystem::path& dir,
                  unsigned jobs = 0);

std::string series_header();
std::string series_row(const Record& r, const MonitorConfig& mc);

void write_snapshot(const std::filesystem::path& file, const FlowState& s, const FlowParams& p,
                    const TargetGeometry& tg);
// inverse of write_snapshot for the half collar; ell comes from the config
SymmetricMap read_snapshot(const std::filesystem::path& file, int n, double sigma);

void write_error_json(const std::filesystem::path& dir, const std::string& kind, const std::string& message,
                      const std::vector<std::string>& details = {});

}  // namespace tmf
