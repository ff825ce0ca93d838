#include <doctest.h>

#include "tmf/runner.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tmf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("tmf_test_" + name);
    fs::remove_all(p);
    return p;
}

const char* small_flat =
    "mode = rescaled\n"
    "target.warping = flat\n"
    "initial.ell0 = 0.3\n"
    "grid.n = 256\n"
    "grid.sigma = 8\n"
    "flow.t_max = 0.05\n";

}  // namespace

TEST_CASE("config parsing")
{
    auto empty = parse_config("");
    REQUIRE(empty.ok());
    CHECK(empty.config == RunConfig{});

    auto bad = parse_config("# comment\nflow.eta = -1\n");
    REQUIRE(bad.errors.size() == 1);
    CHECK(bad.errors[0].find("line 2") == 0);
    CHECK(bad.errors[0].find("flow.eta") != std::string::npos);

    auto many = parse_config("foo.bar = 1\ngrid.n = ten\nflow.t_max = -3\nno equals sign\n");
    REQUIRE(many.errors.size() == 4);
    CHECK(many.errors[0].find("unknown key 'foo.bar'") != std::string::npos);
    CHECK(many.errors[1].find("expected an integer") != std::string::npos);
    CHECK(many.errors[2].find("line 3: flow.t_max") == 0);
    CHECK(many.errors[3].find("line 4") == 0);

    auto e = parse_config("target.warping = exp\n");
    REQUIRE(e.ok());
    CHECK(e.config.warp.c3 == 0.015);
    CHECK(e.config.warp.Lambda == 60.0);
    auto e2 = parse_config("target.c3 = 0.01\ntarget.warping = exp\n");
    CHECK(e2.config.warp.c3 == 0.01);

    auto infeasible = parse_config("target.Lambda = 5\ntarget.c3 = 1\n");
    REQUIRE_FALSE(infeasible.ok());
    CHECK(infeasible.errors[0].find("target.warping") != std::string::npos);

    CHECK_FALSE(parse_config("target.warping = flat\n").ok());
}

TEST_CASE("config round trip")
{
    auto pr = parse_config("mode = rescaled\ntarget.delta = 0.3\nflow.dt_init = 1.2345678901234567e-7\n"
                           "output.dir = some dir/x\nmonitor.c0 = 0.1\nseed = 42\n");
    REQUIRE(pr.ok());
    auto text = serialize_config(pr.config);
    auto back = parse_config(text);
    REQUIRE(back.ok());
    CHECK(back.config == pr.config);
    CHECK(serialize_config(back.config) == text);
    CHECK(back.config.flow.dt_init == 1.2345678901234567e-7);
    CHECK(back.config.out_dir == "some dir/x");
}

TEST_CASE("sweep files")
{
    auto runs = parse_sweep("# header\n[run a]\ntarget.delta = 0.25\n\n[run]\nflow.t_max = 2\n");
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].name == "a");
    CHECK(runs[1].name == "run_001");
    auto cfg = parse_config(runs[0].overrides, parse_config("mode = rescaled\n").config);
    REQUIRE(cfg.ok());
    CHECK(cfg.config.warp.delta == 0.25);
    CHECK(cfg.config.flow.mode == FlowMode::Rescaled);
    CHECK_THROWS(parse_sweep("flow.t_max = 1\n[run a]\n"));
    CHECK_THROWS(parse_sweep("[run a]\n[run a]\n"));
}

TEST_CASE("execution is deterministic and writes the artifacts")
{
    auto pr = parse_config(small_flat);
    REQUIRE(pr.ok());
    auto d1 = scratch("det1"), d2 = scratch("det2");
    auto o = execute_to(pr.config, d1);
    execute_to(pr.config, d2);
    auto s1 = slurp(d1 / "series.csv");
    CHECK(s1 == slurp(d2 / "series.csv"));
    CHECK(s1.rfind(series_header() + "\n", 0) == 0);
    CHECK(s1.find("nan") == std::string::npos);
    std::size_t rows = 0;
    for (char c : s1) rows += c == '\n';
    CHECK(rows == o.run.series.size() + 1);

    auto j = nlohmann::json::parse(slurp(d1 / "summary.json"));
    CHECK(j["schema_version"] == kSummarySchemaVersion);
    CHECK(j["termination"]["cause"] == "t_max reached");
    CHECK(j["config"]["target.warping"] == "flat");
    CHECK(j["monitors"]["thm2_regime"]["bounded"] == o.run.series.size());

    auto z = pr.config;
    z.flow.t_max = 0.0;
    auto d3 = scratch("tmax0");
    CHECK(execute(z, d3) == 0);
    CHECK(slurp(d3 / "series.csv") == series_header() + "\n");
    CHECK(nlohmann::json::parse(slurp(d3 / "summary.json"))["termination"]["cause"] == "t_max reached");
}

TEST_CASE("snapshots round trip and import")
{
    auto pr = parse_config(std::string(small_flat) + "output.snapshot_every = 5\n");
    REQUIRE(pr.ok());
    auto d = scratch("snap");
    auto o = execute_to(pr.config, d);
    REQUIRE(fs::exists(d / "snapshot_000000.csv"));
    REQUIRE(fs::exists(d / "snapshot_final.csv"));
    auto header = slurp(d / "snapshot_final.csv").substr(0, 21);
    CHECK(header == "xi,s,v,r,z,psi,theta\n");

    auto u = read_snapshot(d / "snapshot_final.csv", 256, 8.0);
    const auto& f = o.run.final_state.map;
    for (int j = 0; j <= u.m(); ++j) {
        CHECK(u.v_abs(j) == f.v_abs(j));
        CHECK(u.r[j] == f.r[j]);
        CHECK(u.z[j] == f.z[j]);
    }
    CHECK_THROWS(read_snapshot(d / "snapshot_final.csv", 512, 8.0));

    auto imp = pr.config;
    imp.import_path = (d / "snapshot_final.csv").string();
    imp.initial.ell0 = o.run.final_state.ell;
    imp.snapshot_every = 0;
    auto o2 = simulate(imp);
    CHECK(o2.run.series.front().E == doctest::Approx(o.run.series.back().E).epsilon(1e-12));
}

TEST_CASE("failures produce error json")
{
    auto pr = parse_config(small_flat);
    auto cfg = pr.config;
    cfg.import_path = "/nonexistent/snapshot.csv";
    auto d = scratch("err");
    CHECK(execute(cfg, d) != 0);
    auto j = nlohmann::json::parse(slurp(d / "error.json"));
    CHECK(j["error"]["message"].get<std::string>().find("/nonexistent") != std::string::npos);
}
