#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tmf/runner.hpp"

namespace py = pybind11;
using namespace tmf;

namespace {

RunConfig config_or_raise(const std::string& text)
{
    auto pr = parse_config(text);
    if (!pr.ok()) {
        std::string msg = "invalid configuration:";
        for (auto& e : pr.errors) msg += "\n  " + e;
        throw py::value_error(msg);
    }
    return pr.config;
}

py::dict fit_dict(const FitResult& f)
{
    py::dict d;
    d["available"] = f.available;
    d["note"] = f.note;
    d["delta_fit"] = f.delta_fit;
    d["log_rate_exponent"] = f.log_rate_exponent;
    d["prefactor"] = f.prefactor;
    d["blowup_time_estimate"] = f.blowup_time_estimate ? py::cast(*f.blowup_time_estimate) : py::none();
    d["ell_span"] = f.ell_span;
    d["points"] = f.points;
    return d;
}

py::dict series_dict(const std::vector<Record>& s)
{
    py::dict d;
    auto col = [&](const char* name, double Record::*field) {
        py::array_t<double> a(s.size());
        auto m = a.mutable_unchecked<1>();
        for (std::size_t i = 0; i < s.size(); ++i) m(i) = s[i].*field;
        d[name] = a;
    };
    col("t", &Record::t);
    col("ell", &Record::ell);
    col("X", &Record::X);
    col("E", &Record::E);
    col("psi_mean", &Record::psi_mean);
    col("psi_std", &Record::psi_std);
    col("b0", &Record::b0);
    col("I", &Record::I);
    col("L_leash", &Record::L_leash);
    col("v_max", &Record::v_max);
    col("tension_norm", &Record::tension_norm);
    col("rate", &Record::rate);
    col("dE_dt_fd", &Record::dE_dt_fd);
    col("dE_dt_model", &Record::dE_dt_model);
    return d;
}

py::dict run_dict(const RunOutput& o)
{
    py::dict d;
    d["cause"] = o.run.cause;
    d["rejected_steps"] = o.run.rejected_steps;
    d["ell0"] = o.initial.ell0;
    d["initial_energy"] = o.initial.budget.total;
    d["fit"] = fit_dict(o.run.fit);
    d["series"] = series_dict(o.run.series);
    d["chain_violations"] = o.monitors.chain_violations;
    d["bounded_records"] = o.monitors.bounded;
    d["stretching_records"] = o.monitors.stretching;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Teichmueller harmonic map flow on cylinders";

    m.def(
        "collar_width",
        [](double ell, const std::string& variant, double d) {
            if (variant == "cylinder") return collar_width(ell, CollarVariant::Cylinder, d);
            if (variant == "closed") return collar_width(ell, CollarVariant::Closed, d);
            throw py::value_error("variant must be 'cylinder' or 'closed'");
        },
        py::arg("ell"), py::arg("variant") = "cylinder", py::arg("d") = 1.0);

    m.def(
        "extremal_radii",
        [](double C_N) {
            auto r = extremal_radii(C_N);
            return py::make_tuple(r.r_max, r.r_min);
        },
        py::arg("C_N"), "(r_max, r_min) of r^2 P(r)");

    m.def("default_config", [] { return serialize_config(RunConfig{}); });

    m.def(
        "parse_config",
        [](const std::string& text) {
            auto pr = parse_config(text);
            return py::make_tuple(serialize_config(pr.config), pr.errors);
        },
        py::arg("text"), "(normalized config text, list of violations)");

    m.def(
        "simulate",
        [](const std::string& text) {
            auto cfg = config_or_raise(text);
            RunOutput o;
            {
                py::gil_scoped_release release;
                o = simulate(cfg);
            }
            return run_dict(o);
        },
        py::arg("config"));

    m.def(
        "execute",
        [](const std::string& text, const std::string& out_dir) {
            auto cfg = config_or_raise(text);
            py::gil_scoped_release release;
            return execute(cfg, out_dir);
        },
        py::arg("config"), py::arg("out_dir"));

    m.def(
        "thm2_regime",
        [](double ell, double L_leash, double c0, double C1, double delta) {
            Record r;
            r.ell = ell;
            r.L_leash = L_leash;
            MonitorConfig c;
            c.c0 = c0;
            c.C1 = C1;
            c.delta = delta;
            return regime_name(thm2_monitor(r, c).regime);
        },
        py::arg("ell"), py::arg("L_leash"), py::arg("c0") = 1.0, py::arg("C1") = 10.0, py::arg("delta") = 0.5);

    m.attr("SUMMARY_SCHEMA_VERSION") = kSummarySchemaVersion;
}
