// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <future>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kfsi/io.hpp"
#include "kfsi/verify.hpp"

namespace {

using namespace kfsi;

RunConfig load_config(const std::string& config_path, const std::string& preset,
                      const std::string& out_dir, long seed, int threads) {
    RunConfig cfg;
    if (!config_path.empty() && !preset.empty())
        throw ConfigError("pass either --config or --preset, not both");
    if (!config_path.empty())
        cfg = parse_config_file(config_path);
    else if (!preset.empty())
        cfg = preset_config(preset);
    else
        throw ConfigError("one of --config or --preset is required");
    apply_env_overrides(cfg);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<unsigned long>(seed);
    if (threads > 0) cfg.threads = threads;
    cfg.validate();
    return cfg;
}

RunOutcome execute(const RunConfig& cfg) {
    Scenario sc = build_scenario(cfg);
    if (sc.fluid) {
        if (!sc.basis)
            throw ConfigError("coupled runs require a flat channel geometry; "
                              "curved catalogs support the verification suites only");
        Coupler coupler(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing);
        return coupler.continue_run(sc.input);
    }
    // shell-only path
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

void write_run_artifacts(const RunConfig& cfg, const RunOutcome& outcome,
                         const std::vector<VecX>* alpha_history) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::string tag = cfg.hash();
    write_ledger_csv(cfg.out_dir + "/ledger-" + tag + ".csv", outcome.ledger);
    write_text(cfg.out_dir + "/outcome-" + tag + ".json", outcome_json(outcome, cfg));
    if (alpha_history && !alpha_history->empty())
        write_snapshot(cfg.out_dir + "/snapshot-" + tag + ".bin", *alpha_history, cfg.n_s,
                       0.0, cfg.dt);
}

int cmd_run(const RunConfig& cfg) {
    // keep the full coefficient trajectory for the snapshot
    Scenario sc = build_scenario(cfg);
    if (sc.fluid && sc.basis) {
        Coupler coupler(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing);
        const RunOutcome outcome = coupler.continue_run(sc.input);
        write_run_artifacts(cfg, outcome, &outcome.alpha);
        std::cout << outcome_json(outcome, cfg);
        return outcome.status == "aborted" ? 2 : 0;
    }
    const RunOutcome outcome = execute(cfg);
    write_run_artifacts(cfg, outcome, nullptr);
    std::cout << outcome_json(outcome, cfg);
    return outcome.status == "aborted" ? 2 : 0;
}

int cmd_verify(const std::string& suite, bool quick, const std::string& out_dir,
               long seed) {
    VerifyOptions opt;
    opt.quick = quick;
    if (seed >= 0) opt.seed = static_cast<unsigned>(seed);
    const auto results = verify_suite(suite, opt);
    for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  measured "
                  << r.measured << " " << r.cmp << " " << r.threshold;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << "\n";
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text(out_dir + "/verify-" + suite + ".json", verify_json(results));
    }
    return all_passed(results) ? 0 : 1;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    for (const char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

int cmd_sweep(const RunConfig& cfg, const std::string& eps_grid,
              const std::string& etilde_grid) {
    std::vector<double> eps_list = eps_grid.empty() ? std::vector<double>{cfg.eps}
                                                    : parse_grid(eps_grid);
    std::vector<double> et_list = etilde_grid.empty() ? std::vector<double>{cfg.eps_tilde}
                                                      : parse_grid(etilde_grid);
    Scenario sc = build_scenario(cfg);
    if (!sc.fluid || !sc.basis)
        throw ConfigError("sweep requires a coupled flat-channel scenario");

    std::vector<std::pair<double, double>> cells_in;
    for (const double e : eps_list)
        for (const double et : et_list) cells_in.emplace_back(e, et);

    std::vector<SweepCell> cells(cells_in.size());
    auto run_cell = [&](size_t i) {
        const auto [e, et] = cells_in[i];
        SweepCell cell;
        cell.eps = e;
        cell.eps_tilde = et;
        GalerkinConfig g = sc.gcfg;
        g.eps = e;
        g.eps_tilde = et;
        try {
            Coupler coupler(*sc.basis, sc.law, sc.elastic, g, sc.ccfg, sc.forcing);
            cell.outcome = coupler.continue_run(sc.input);
            cell.eps_term = cell.outcome.gronwall.eps_term;
        } catch (const Error& err) {
            cell.failed = true;
            cell.error = err.what();
        }
        cells[i] = std::move(cell);
    };
    if (cfg.threads > 1) {
        std::vector<std::future<void>> futures;
        for (size_t i = 0; i < cells_in.size(); ++i)
            futures.push_back(std::async(std::launch::async, run_cell, i));
        for (auto& f : futures) f.get();
    } else {
        for (size_t i = 0; i < cells_in.size(); ++i) run_cell(i);
    }
    std::filesystem::create_directories(cfg.out_dir);
    const std::string tag = cfg.hash();
    for (size_t i = 0; i < cells.size(); ++i) {
        if (!cells[i].failed)
            write_ledger_csv(cfg.out_dir + "/ledger-" + tag + "-cell" + std::to_string(i) +
                                 ".csv",
                             cells[i].outcome.ledger);
    }
    const std::string report = sweep_json(cells, cfg);
    write_text(cfg.out_dir + "/sweep-" + tag + ".json", report);
    std::cout << report;
    return 0;
}

int cmd_export(const RunConfig& cfg, const std::string& what, double eta_const) {
    Scenario sc = build_scenario(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string tag = cfg.hash();
    if (what == "surface") {
        const Displacement eta = Displacement::constant(*sc.surface, eta_const);
        export_surface_csv(cfg.out_dir + "/surface-" + tag + ".csv", *sc.surface, eta);
    } else if (what == "matrices") {
        export_matrix_coord(cfg.out_dir + "/shell-mass-" + tag + ".txt", sc.shell->mass);
        export_matrix_coord(cfg.out_dir + "/shell-stiffness-" + tag + ".txt",
                            sc.shell->kmat);
    } else if (what == "quadrature") {
        const VolumeQuadrature q = make_volume_quadrature(*sc.surface, cfg.n_fiber);
        export_quadrature_csv(cfg.out_dir + "/quadrature-" + tag + ".csv", q);
    } else if (what == "certification") {
        StressLaw law = sc.law;
        law.eps_tilde = cfg.eps_tilde;
        const StructureReport rep =
            certify_structure(law, 10000, static_cast<unsigned>(cfg.seed));
        const std::string report = certification_json(rep);
        write_text(cfg.out_dir + "/certification-" + tag + ".json", report);
        std::cout << report;
    } else {
        throw ConfigError("export: unknown target '" + what +
                          "' (surface|matrices|quadrature|certification)");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Incompressible shear-dependent fluid coupled to a Koiter shell: "
                 "desk-scale simulator and verification suites"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir;
    long seed = -1;
    int threads = 0;
    app.add_option("--config", config_path, "configuration file (ini sections)");
    app.add_option("--preset", preset, "built-in preset name");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "RNG seed override");
    app.add_option("--threads", threads, "sweep fan-out thread count");

    auto* run = app.add_subcommand("run", "execute a coupled or shell-only run");
    run->fallthrough();
    auto* verify = app.add_subcommand("verify", "run a property suite");
    verify->fallthrough();
    std::string suite = "all";
    bool quick = false;
    verify->add_option("suite", suite, "geometry|shell|stress|transform|compat|energy|all");
    verify->add_flag("--quick", quick, "reduced sizes");
    auto* sweep = app.add_subcommand("sweep", "fan out runs over regularization grids");
    sweep->fallthrough();
    std::string eps_grid, etilde_grid;
    sweep->add_option("--eps-grid", eps_grid, "comma separated eps values");
    sweep->add_option("--eps-tilde-grid", etilde_grid, "comma separated eps_tilde values");
    auto* exp = app.add_subcommand("export", "export surface/matrix/quadrature tables");
    exp->fallthrough();
    std::string what = "surface";
    double eta_const = 0.0;
    exp->add_option("what", what, "surface|matrices|quadrature|certification");
    exp->add_option("--eta", eta_const, "constant displacement for surface export");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return cmd_verify(suite, quick, out_dir, seed);
        const RunConfig cfg = load_config(config_path, preset, out_dir, seed, threads);
        if (run->parsed()) return cmd_run(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg, eps_grid, etilde_grid);
        if (exp->parsed()) return cmd_export(cfg, what, eta_const);
    } catch (const kfsi::ConfigError& e) {
        nlohmann::json j;
        j["error"] = e.what();
        j["issues"] = e.issues;
        std::cerr << j.dump(2) << "\n";
        return 2;
    } catch (const kfsi::Error& e) {
        nlohmann::json j;
        j["error"] = e.what();
        std::cerr << j.dump(2) << "\n";
        return 3;
    }
    return 0;
}
