// SPDX-License-Identifier: Apache-2.0
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kfsi/io.hpp"
#include "kfsi/verify.hpp"

namespace py = pybind11;
using namespace kfsi;

namespace {

py::dict outcome_to_dict(const RunOutcome& out) {
    py::dict d;
    d["status"] = out.status;
    d["breakdown"] = out.breakdown;
    d["t_reached"] = out.t_reached;
    d["eta_sup_final"] = out.eta_sup_final;
    d["windows"] = out.windows;
    py::dict g;
    g["pass"] = out.gronwall.pass;
    g["constant"] = out.gronwall.constant;
    g["log_slope"] = out.gronwall.log_slope;
    g["eps_term"] = out.gronwall.eps_term;
    d["gronwall"] = g;
    std::vector<double> t, energy, residual, eta_sup;
    for (const auto& r : out.ledger.rows) {
        t.push_back(r.t);
        energy.push_back(r.energy());
        residual.push_back(r.residual);
        eta_sup.push_back(r.eta_sup);
    }
    py::dict ledger;
    ledger["t"] = t;
    ledger["energy"] = energy;
    ledger["residual"] = residual;
    ledger["eta_sup"] = eta_sup;
    d["ledger"] = ledger;
    if (!out.abort_reason.empty()) d["abort_reason"] = out.abort_reason;
    d["fixed_point_status"] = out.last_report.status;
    d["fixed_point_iterations"] = out.last_report.iterations;
    return d;
}

RunOutcome run_config(const RunConfig& cfg) {
    Scenario sc = build_scenario(cfg);
    if (sc.fluid) {
        if (!sc.basis)
            throw ConfigError("coupled runs require a flat channel geometry");
        Coupler coupler(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing);
        return coupler.continue_run(sc.input);
    }
    ShellOscillator osc(*sc.shell, sc.elastic, sc.gcfg, sc.forcing);
    VecX e0 = VecX::Zero(sc.shell->count), e1 = VecX::Zero(sc.shell->count);
    e0.head(sc.input.eta0_coef.size()) = sc.input.eta0_coef;
    e1.head(sc.input.eta1_coef.size()) = sc.input.eta1_coef;
    osc.reset(e0, e1);
    const int steps = static_cast<int>(std::lround(cfg.horizon / cfg.dt));
    for (int n = 0; n < steps; ++n) osc.step();
    RunOutcome out;
    out.status = "horizon";
    out.t_reached = osc.t();
    out.ledger = osc.ledger();
    out.eta_sup_final = osc.ledger().rows.back().eta_sup;
    out.gronwall = gronwall_check(out.ledger, sc.gcfg);
    return out;
}

ReferenceSurface surface_from_kind(const std::string& kind, double size_a, double size_b,
                                   int n1, int n2) {
    if (kind == "sphere") return make_sphere(size_a, n1, n2);
    if (kind == "circle") return make_circle(size_a, n1);
    if (kind == "cylinder") return make_cylinder(size_a, size_b, n1, n2);
    if (kind == "flat-channel") return make_flat_patch(size_a, size_a, size_b, n1, n2);
    if (kind == "flat-channel-2d") return make_flat_patch_2d(size_a, size_b, n1);
    throw ArgumentError("unknown surface kind '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_kfsi, m) {
    m.doc() = "Incompressible shear-dependent fluid coupled to a Koiter shell: "
              "desk-scale simulator and verification suites";

    py::register_exception<Error>(m, "KfsiError");

    py::class_<ReferenceSurface>(m, "Surface")
        .def_property_readonly("dim", [](const ReferenceSurface& s) { return s.dim; })
        .def_property_readonly("kappa", [](const ReferenceSurface& s) { return s.kappa; })
        .def_property_readonly("measure",
                               [](const ReferenceSurface& s) { return s.measure; })
        .def_property_readonly("volume", [](const ReferenceSurface& s) { return s.volume; })
        .def_property_readonly("node_count",
                               [](const ReferenceSurface& s) { return s.node_count(); })
        .def("tubular_radius", [](const ReferenceSurface& s) { return tubular_radius(s); })
        .def("gamma_constant",
             [](const ReferenceSurface& s, double c) {
                 const VecX g = gamma_factor(s, Displacement::constant(s, c));
                 return std::vector<double>(g.data(), g.data() + g.size());
             },
             py::arg("eta"),
             "nodal values of 1 - 2 H eta + G eta^2 for a constant displacement")
        .def("gamma_area",
             [](const ReferenceSurface& s, double c) {
                 return surface_integral(s, Displacement::constant(s, c),
                                         VecX::Ones(s.node_count()));
             },
             py::arg("eta"), "integral of gamma(eta) dA for a constant displacement")
        .def("mean_curvature", [](const ReferenceSurface& s) {
            return std::vector<double>(s.H.begin(), s.H.end());
        });

    m.def("surface", &surface_from_kind, py::arg("kind"), py::arg("size_a") = 1.0,
          py::arg("size_b") = 1.0, py::arg("n1") = 16, py::arg("n2") = 16,
          "catalog surfaces: sphere|circle|cylinder|flat-channel|flat-channel-2d");

    m.def("tau", py::overload_cast<double, double>(&tau), py::arg("sup_norm"),
          py::arg("kappa"), "degeneracy monitor (1 - |eta|/kappa)^-1");

    py::class_<StressLaw>(m, "StressLaw")
        .def(py::init([](double mu0, double delta, double p, double eps_tilde) {
                 StressLaw law{mu0, delta, p, eps_tilde};
                 law.validate();
                 return law;
             }),
             py::arg("mu0") = 1.0, py::arg("delta") = 1.0, py::arg("p") = 2.0,
             py::arg("eps_tilde") = 0.0)
        .def_readonly("mu0", &StressLaw::mu0)
        .def_readonly("delta", &StressLaw::delta)
        .def_readonly("p", &StressLaw::p)
        .def_property_readonly("p0", &StressLaw::p0)
        .def("eval",
             [](const StressLaw& law, const std::vector<std::vector<double>>& d) {
                 Mat3 D = Mat3::Zero();
                 for (size_t i = 0; i < d.size() && i < 3; ++i)
                     for (size_t j = 0; j < d[i].size() && j < 3; ++j) D(i, j) = d[i][j];
                 const Mat3 S = law.eval(D);
                 std::vector<std::vector<double>> out(3, std::vector<double>(3));
                 for (int i = 0; i < 3; ++i)
                     for (int j = 0; j < 3; ++j) out[i][j] = S(i, j);
                 return out;
             },
             py::arg("D"))
        .def("certify",
             [](const StressLaw& law, long samples, unsigned seed) {
                 const StructureReport rep = certify_structure(law, samples, seed);
                 py::dict d;
                 d["passed"] = rep.passed;
                 d["c0"] = rep.c0;
                 d["c1"] = rep.c1;
                 d["monotone"] = rep.monotone;
                 d["samples"] = rep.sample_count;
                 return d;
             },
             py::arg("samples") = 10000, py::arg("seed") = 2024);

    py::class_<RunConfig>(m, "Config")
        .def("set",
             [](RunConfig& cfg, const std::string& key, const std::string& value) {
                 set_config_key(cfg, key, value);
             },
             py::arg("key"), py::arg("value"), "dotted key, e.g. 'time.dt'")
        .def("get", [](const RunConfig& cfg,
                       const std::string& key) { return get_config_key(cfg, key); })
        .def("hash", &RunConfig::hash)
        .def("validate", &RunConfig::validate);

    m.def("preset", &preset_config, py::arg("name"),
          "built-in presets: zero|plate-pulse|breakdown|stress|oscillator");
    m.def("config_from_file", &parse_config_file, py::arg("path"));

    m.def("run", [](const RunConfig& cfg) { return outcome_to_dict(run_config(cfg)); },
          py::arg("config"), "execute a coupled or shell-only run");

    m.def("verify",
          [](const std::string& suite, bool quick, unsigned seed) {
              VerifyOptions opt;
              opt.quick = quick;
              opt.seed = seed;
              py::list out;
              for (const auto& r : verify_suite(suite, opt)) {
                  py::dict d;
                  d["name"] = r.name;
                  d["pass"] = r.pass;
                  d["measured"] = r.measured;
                  d["threshold"] = r.threshold;
                  d["cmp"] = r.cmp;
                  out.append(d);
              }
              return out;
          },
          py::arg("suite"), py::arg("quick") = true, py::arg("seed") = 1234,
          "run a property suite: geometry|shell|stress|transform|compat|energy|all");
}
