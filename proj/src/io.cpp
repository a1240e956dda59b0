// SPDX-License-Identifier: Apache-2.0
#include "kfsi/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace kfsi {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

nlohmann::json ledger_summary(const EnergyLedger& ledger) {
    nlohmann::json j;
    if (ledger.rows.empty()) return j;
    double emax = 0, res_max = 0, diss_min = 0;
    for (const auto& r : ledger.rows) {
        emax = std::max(emax, r.energy());
        res_max = std::max(res_max, r.residual);
        diss_min = std::min(diss_min, r.diss_rate);
    }
    j["rows"] = ledger.rows.size();
    j["energy_max"] = emax;
    j["residual_max"] = res_max;
    j["dissipation_rate_min"] = diss_min;
    j["final_energy"] = ledger.rows.back().energy();
    j["final_residual"] = ledger.rows.back().residual;
    return j;
}

}  // namespace

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

void write_ledger_csv(const std::string& path, const EnergyLedger& ledger) {
    std::string text =
        "t,E_kin_fluid,E_kin_shell,E_koiter,dissipation,power,residual,eta_sup,tau\n";
    for (const auto& r : ledger.rows) {
        text += fmt(r.t) + "," + fmt(r.e_kin_fluid) + "," + fmt(r.e_kin_shell) + "," +
                fmt(r.e_koiter) + "," + fmt(r.diss_rate) + "," + fmt(r.power_rate) + "," +
                fmt(r.residual) + "," + fmt(r.eta_sup) + "," + fmt(r.tau_val) + "\n";
    }
    write_text(path, text);
}

void write_snapshot(const std::string& path, const std::vector<VecX>& alpha_history,
                    int n_s, double t0, double dt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    char magic[16] = {};
    std::memcpy(magic, "KFSI-SNAP", 9);
    out.write(magic, 16);
    const uint32_t version = 1;
    const uint32_t rows = static_cast<uint32_t>(alpha_history.size());
    const uint32_t ncol = rows ? static_cast<uint32_t>(alpha_history[0].size()) : 0;
    const uint32_t ns = static_cast<uint32_t>(n_s);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&ncol), 4);
    out.write(reinterpret_cast<const char*>(&ns), 4);
    out.write(reinterpret_cast<const char*>(&t0), 8);
    out.write(reinterpret_cast<const char*>(&dt), 8);
    for (const VecX& a : alpha_history)
        out.write(reinterpret_cast<const char*>(a.data()),
                  static_cast<std::streamsize>(sizeof(double) * a.size()));
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    char magic[16];
    in.read(magic, 16);
    if (std::memcmp(magic, "KFSI-SNAP", 9) != 0) throw Error("bad snapshot magic");
    Snapshot snap;
    uint32_t version, rows, ncol, ns;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&ncol), 4);
    in.read(reinterpret_cast<char*>(&ns), 4);
    in.read(reinterpret_cast<char*>(&snap.t0), 8);
    in.read(reinterpret_cast<char*>(&snap.dt), 8);
    snap.version = version;
    snap.n_s = static_cast<int>(ns);
    snap.alpha.assign(rows, VecX::Zero(ncol));
    for (uint32_t i = 0; i < rows; ++i)
        in.read(reinterpret_cast<char*>(snap.alpha[i].data()),
                static_cast<std::streamsize>(sizeof(double) * ncol));
    if (!in) throw Error("truncated snapshot '" + path + "'");
    return snap;
}

std::string outcome_json(const RunOutcome& outcome, const RunConfig& cfg) {
    nlohmann::json j;
    j["schema"] = "kfsi-outcome-v1";
    j["config_hash"] = cfg.hash();
    j["status"] = outcome.status;
    j["breakdown"] = outcome.breakdown;
    j["t_reached"] = outcome.t_reached;
    j["eta_sup_final"] = outcome.eta_sup_final;
    j["windows"] = outcome.windows;
    j["total_halvings"] = outcome.total_halvings;
    j["ledger"] = ledger_summary(outcome.ledger);
    j["gronwall"] = {{"pass", outcome.gronwall.pass},
                     {"constant", outcome.gronwall.constant},
                     {"log_slope", outcome.gronwall.log_slope},
                     {"eps_term", outcome.gronwall.eps_term}};
    if (!outcome.abort_reason.empty()) j["abort_reason"] = outcome.abort_reason;
    j["fixed_point"] = {{"status", outcome.last_report.status},
                        {"iterations", outcome.last_report.iterations},
                        {"halvings", outcome.last_report.halvings},
                        {"final_increment", outcome.last_report.final_increment},
                        {"increments", outcome.last_report.increments},
                        {"contraction", outcome.last_report.contraction},
                        {"steklov_zero_extension", outcome.last_report.steklov_clipped}};
    return j.dump(2) + "\n";
}

std::string fixed_point_json(const FixedPointReport& report, const RunConfig& cfg) {
    nlohmann::json j;
    j["schema"] = "kfsi-fixed-point-v1";
    j["config_hash"] = cfg.hash();
    j["status"] = report.status;
    j["iterations"] = report.iterations;
    j["halvings"] = report.halvings;
    j["final_increment"] = report.final_increment;
    j["increments"] = report.increments;
    j["contraction"] = report.contraction;
    return j.dump(2) + "\n";
}

std::string sweep_json(const std::vector<SweepCell>& cells, const RunConfig& cfg) {
    nlohmann::json j;
    j["schema"] = "kfsi-sweep-v1";
    j["config_hash"] = cfg.hash();
    nlohmann::json arr = nlohmann::json::array();
    double bound_max = 0.0;
    for (const auto& c : cells) {
        nlohmann::json cj;
        cj["eps"] = c.eps;
        cj["eps_tilde"] = c.eps_tilde;
        cj["failed"] = c.failed;
        if (c.failed) {
            cj["error"] = c.error;
        } else {
            cj["status"] = c.outcome.status;
            cj["t_reached"] = c.outcome.t_reached;
            cj["eps_term"] = c.eps_term;
            cj["ledger"] = ledger_summary(c.outcome.ledger);
            bound_max = std::max(bound_max, c.eps_term);
        }
        arr.push_back(cj);
    }
    j["cells"] = arr;
    j["eps_term_max"] = bound_max;
    return j.dump(2) + "\n";
}

std::string certification_json(const StructureReport& report) {
    nlohmann::json j;
    j["schema"] = "kfsi-certification-v1";
    j["passed"] = report.passed;
    j["c0"] = report.c0;
    j["c1"] = report.c1;
    j["samples"] = report.sample_count;
    j["monotone"] = report.monotone;
    j["extremal_growth"] = {{"dnorm", report.extremal_growth.dnorm},
                            {"ratio", report.extremal_growth.growth_ratio}};
    j["extremal_coercivity"] = {{"dnorm", report.extremal_coercivity.dnorm},
                                {"ratio", report.extremal_coercivity.coercivity_ratio}};
    if (!report.monotone) {
        std::vector<double> D(report.witness_D.data(), report.witness_D.data() + 9);
        std::vector<double> E(report.witness_E.data(), report.witness_E.data() + 9);
        j["witness"] = {{"D", D}, {"E", E}, {"product", report.witness_product}};
    }
    return j.dump(2) + "\n";
}

void export_surface_csv(const std::string& path, const ReferenceSurface& s,
                        const Displacement& eta) {
    const VecX gamma = gamma_factor(s, eta);
    std::string text = "node,x,y,z,nu_x,nu_y,nu_z,H,G,gamma\n";
    for (int i = 0; i < s.node_count(); ++i) {
        text += std::to_string(i) + "," + fmt(s.X[i][0]) + "," + fmt(s.X[i][1]) + "," +
                fmt(s.X[i][2]) + "," + fmt(s.nu[i][0]) + "," + fmt(s.nu[i][1]) + "," +
                fmt(s.nu[i][2]) + "," + fmt(s.H[i]) + "," + fmt(s.G[i]) + "," +
                fmt(gamma[i]) + "\n";
    }
    write_text(path, text);
}

void export_matrix_coord(const std::string& path, const MatX& m) {
    std::string text = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0)
                text += std::to_string(i) + " " + std::to_string(j) + " " + fmt(m(i, j)) + "\n";
    write_text(path, text);
}

void export_quadrature_csv(const std::string& path, const VolumeQuadrature& q) {
    std::string text = "node,x,y,z,weight\n";
    for (int k = 0; k < q.count(); ++k) {
        const Vec3 x = q.ref_point(k);
        text += std::to_string(k) + "," + fmt(x[0]) + "," + fmt(x[1]) + "," + fmt(x[2]) +
                "," + fmt(q.weight(k)) + "\n";
    }
    write_text(path, text);
}

}  // namespace kfsi
