// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <string>

#include "kfsi/coupler.hpp"

namespace kfsi {

struct RunConfig {
    // [geometry]
    std::string geometry = "flat-channel";
    double Lx = 1.0, Ly = 1.0, height = 0.5;
    double radius = 1.0, length = 1.0, cap_angle = 0.0;
    int n1 = 12, n2 = 12, n_fiber = 10;
    // [elastic]
    ElasticParams elastic;
    // [stress]
    double mu0 = 1.0, delta = 1.0, p = 2.0;
    // [regularization]
    double eps = 0.05, eps_tilde = 0.0, cutoff_scale = 1.0;
    // [basis]
    int n_s = 8, n_f = 32, profile_cap = 8;
    bool fluid = true;
    // [time]
    double dt = 5e-4, window = 0.25, horizon = 1.0;
    // [forcing]
    std::string f_kind = "none";
    double f_amp = 0.0, f_t0 = 0.0, f_sigma = 1.0, f_speed = 0.0;
    int f_mode = 1;
    std::string g_kind = "none";
    double g_amp = 0.0, g_t0 = 0.0, g_sigma = 1.0, g_speed = 0.0;
    int g_mode = 1;
    // [init]
    std::string eta0_kind = "zero", eta1_kind = "zero";
    double eta0_amp = 0.0, eta1_amp = 0.0;
    int eta0_mode = 0, eta1_mode = 0;
    // [solver]
    double tol_picard = 1e-10, tol_fp = 1e-7, fp_damping = 1.0, picard_damping = 1.0;
    int max_picard = 200, max_fp_iter = 60, max_halvings = 6;
    double kappa_fraction = 0.95;
    // [output]
    std::string out_dir = "out";
    unsigned long seed = 1234;
    int threads = 1;

    void validate() const;          // lists every violation at once
    std::string canonical() const;  // ordered key=value dump
    std::string hash() const;       // FNV-1a of the canonical form, hex
};

RunConfig parse_config_text(const std::string& text);
// dotted-key access ("section.key") backed by the same binding table the
// parser uses
void set_config_key(RunConfig& cfg, const std::string& dotted_key, const std::string& value);
std::string get_config_key(const RunConfig& cfg, const std::string& dotted_key);
RunConfig parse_config_file(const std::string& path);
// presets: zero | plate-pulse | breakdown | stress | oscillator
RunConfig preset_config(const std::string& name);
// environment overrides KFSI_<SECTION>_<KEY>=value
void apply_env_overrides(RunConfig& cfg);

// Assembled, ready-to-run objects. Holds its surface/basis graph by pointer,
// so it is move-only.
struct Scenario {
    std::unique_ptr<ReferenceSurface> surface;
    std::unique_ptr<ShellBasis> shell;
    std::unique_ptr<CoupledBasis> basis;  // null when fluid is off or the surface is curved
    ElasticParams elastic;
    StressLaw law;
    GalerkinConfig gcfg;
    CouplerConfig ccfg;
    Forcing forcing;
    SolveInput input;
    bool fluid = true;
};

Scenario build_scenario(const RunConfig& cfg);

}  // namespace kfsi
