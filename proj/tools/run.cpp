#include "tmf/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

int main(int argc, char** argv)
{
    CLI::App app{"Teichmueller harmonic map flow on cylinders"};
    app.require_subcommand(1);
    auto* run = app.add_subcommand("run", "integrate the flow for a config file");
    std::string config, out, sweep;
    bool validate_only = false;
    unsigned jobs = 0;
    run->add_option("config", config, "flat key = value config")->required();
    run->add_option("--out", out, "output directory (overrides output.dir)");
    run->add_flag("--validate-only", validate_only, "check the config and exit");
    run->add_option("--sweep", sweep, "file of [run NAME] override blocks");
    run->add_option("--jobs", jobs, "sweep worker threads (0: hardware concurrency)");
    CLI11_PARSE(app, argc, argv);

    auto pr = tmf::load_config(config);
    std::vector<tmf::SweepRun> runs;
    if (pr.ok() && !sweep.empty()) {
        try {
            std::ifstream in(sweep);
            if (!in) throw std::runtime_error("cannot read " + sweep);
            std::stringstream ss;
            ss << in.rdbuf();
            runs = tmf::parse_sweep(ss.str());
            for (auto& r : runs)
                for (auto& e : tmf::parse_config(r.overrides, pr.config).errors)
                    pr.errors.push_back("run '" + r.name + "': " + e);
        } catch (const std::exception& e) {
            pr.errors.push_back(e.what());
        }
    }
    std::filesystem::path dir = out.empty() ? std::filesystem::path(pr.config.out_dir) : std::filesystem::path(out);
    if (!pr.ok()) {
        for (auto& e : pr.errors) std::fprintf(stderr, "%s: %s\n", config.c_str(), e.c_str());
        if (!validate_only) tmf::write_error_json(dir, "config", "invalid configuration", pr.errors);
        return 2;
    }
    if (validate_only) {
        std::printf("%s: ok\n", config.c_str());
        return 0;
    }
    int status = sweep.empty() ? tmf::execute(pr.config, dir) : tmf::execute_sweep(pr.config, runs, dir, jobs);
    if (status) std::fprintf(stderr, "run failed; see %s/error.json\n", dir.string().c_str());
    return status;
}
