// SPDX-License-Identifier: Apache-2.0
#include "kfsi/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace kfsi {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct KeyBinding {
    std::string section, key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double to_double(const std::string& s) {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}
long to_long(const std::string& s) {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw ConfigError("not an integer: '" + s + "'");
    return v;
}
bool to_bool(const std::string& s) {
    if (s == "true" || s == "on" || s == "1") return true;
    if (s == "false" || s == "off" || s == "0") return false;
    throw ConfigError("not a boolean: '" + s + "'");
}

#define KFSI_BIND_D(sec, key, field)                                              \
    {sec, key, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, \
     [](const RunConfig& c) { return fmt_double(c.field); }}
#define KFSI_BIND_I(sec, key, field)                                                          \
    {sec, key, [](RunConfig& c, const std::string& v) { c.field = static_cast<int>(to_long(v)); }, \
     [](const RunConfig& c) { return std::to_string(c.field); }}
#define KFSI_BIND_S(sec, key, field)                                   \
    {sec, key, [](RunConfig& c, const std::string& v) { c.field = v; }, \
     [](const RunConfig& c) { return c.field; }}
#define KFSI_BIND_B(sec, key, field)                                            \
    {sec, key, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }, \
     [](const RunConfig& c) { return c.field ? std::string("true") : std::string("false"); }}

const std::vector<KeyBinding>& bindings() {
    static const std::vector<KeyBinding> table = {
        KFSI_BIND_S("geometry", "kind", geometry),
        KFSI_BIND_D("geometry", "Lx", Lx),
        KFSI_BIND_D("geometry", "Ly", Ly),
        KFSI_BIND_D("geometry", "height", height),
        KFSI_BIND_D("geometry", "radius", radius),
        KFSI_BIND_D("geometry", "length", length),
        KFSI_BIND_D("geometry", "cap_angle", cap_angle),
        KFSI_BIND_I("geometry", "n1", n1),
        KFSI_BIND_I("geometry", "n2", n2),
        KFSI_BIND_I("geometry", "n_fiber", n_fiber),
        KFSI_BIND_D("elastic", "lambda", elastic.lambda),
        KFSI_BIND_D("elastic", "mu", elastic.mu),
        KFSI_BIND_D("elastic", "eps0", elastic.eps0),
        KFSI_BIND_D("elastic", "rho_s", elastic.rho_s),
        KFSI_BIND_D("elastic", "rho_f", elastic.rho_f),
        KFSI_BIND_D("stress", "mu0", mu0),
        KFSI_BIND_D("stress", "delta", delta),
        KFSI_BIND_D("stress", "p", p),
        KFSI_BIND_D("regularization", "eps", eps),
        KFSI_BIND_D("regularization", "eps_tilde", eps_tilde),
        KFSI_BIND_D("regularization", "cutoff_scale", cutoff_scale),
        KFSI_BIND_I("basis", "n_s", n_s),
        KFSI_BIND_I("basis", "n_f", n_f),
        KFSI_BIND_I("basis", "profile_cap", profile_cap),
        KFSI_BIND_B("basis", "fluid", fluid),
        KFSI_BIND_D("time", "dt", dt),
        KFSI_BIND_D("time", "window", window),
        KFSI_BIND_D("time", "horizon", horizon),
        KFSI_BIND_S("forcing", "f", f_kind),
        KFSI_BIND_D("forcing", "f_amp", f_amp),
        KFSI_BIND_D("forcing", "f_t0", f_t0),
        KFSI_BIND_D("forcing", "f_sigma", f_sigma),
        KFSI_BIND_D("forcing", "f_speed", f_speed),
        KFSI_BIND_I("forcing", "f_mode", f_mode),
        KFSI_BIND_S("forcing", "g", g_kind),
        KFSI_BIND_D("forcing", "g_amp", g_amp),
        KFSI_BIND_D("forcing", "g_t0", g_t0),
        KFSI_BIND_D("forcing", "g_sigma", g_sigma),
        KFSI_BIND_D("forcing", "g_speed", g_speed),
        KFSI_BIND_I("forcing", "g_mode", g_mode),
        KFSI_BIND_S("init", "eta0", eta0_kind),
        KFSI_BIND_S("init", "eta1", eta1_kind),
        KFSI_BIND_D("init", "eta0_amp", eta0_amp),
        KFSI_BIND_D("init", "eta1_amp", eta1_amp),
        KFSI_BIND_I("init", "eta0_mode", eta0_mode),
        KFSI_BIND_I("init", "eta1_mode", eta1_mode),
        KFSI_BIND_D("solver", "tol_picard", tol_picard),
        KFSI_BIND_D("solver", "tol_fp", tol_fp),
        KFSI_BIND_D("solver", "fp_damping", fp_damping),
        KFSI_BIND_D("solver", "picard_damping", picard_damping),
        KFSI_BIND_I("solver", "max_picard", max_picard),
        KFSI_BIND_I("solver", "max_fp_iter", max_fp_iter),
        KFSI_BIND_I("solver", "max_halvings", max_halvings),
        KFSI_BIND_D("solver", "kappa_fraction", kappa_fraction),
        KFSI_BIND_S("output", "dir", out_dir),
        {"output", "seed",
         [](RunConfig& c, const std::string& v) { c.seed = static_cast<unsigned long>(to_long(v)); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        KFSI_BIND_I("output", "threads", threads),
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), ::toupper);
    return s;
}

}  // namespace

void RunConfig::validate() const {
    std::vector<std::string> issues;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0)) issues.push_back(std::string(name) + " must be positive");
    };
    const std::vector<std::string> kinds = {"flat-channel", "flat-channel-2d", "sphere",
                                            "circle", "cylinder"};
    if (std::find(kinds.begin(), kinds.end(), geometry) == kinds.end())
        issues.push_back("geometry.kind '" + geometry + "' unknown");
    positive(Lx, "geometry.Lx");
    positive(height, "geometry.height");
    positive(radius, "geometry.radius");
    if (n1 < 4) issues.push_back("geometry.n1 too small");
    if (n_fiber < 2) issues.push_back("geometry.n_fiber too small");
    if (!(elastic.lambda > 0)) issues.push_back("elastic.lambda must be positive");
    if (!(elastic.mu > 0)) issues.push_back("elastic.mu must be positive");
    if (!(elastic.eps0 > 0)) issues.push_back("elastic.eps0 must be positive");
    if (!(elastic.rho_s > 0)) issues.push_back("elastic.rho_s must be positive");
    if (!(elastic.rho_f > 0)) issues.push_back("elastic.rho_f must be positive");
    positive(mu0, "stress.mu0");
    if (!(delta >= 0)) issues.push_back("stress.delta must be nonnegative");
    if (!(p > 6.0 / 5.0)) issues.push_back("stress.p must exceed 6/5");
    if (fluid) positive(eps, "regularization.eps");
    else if (!(eps >= 0)) issues.push_back("regularization.eps must be nonnegative");
    if (!(eps_tilde >= 0)) issues.push_back("regularization.eps_tilde must be nonnegative");
    if (n_s < 0 || n_f < 0 || n_s + n_f < 1) issues.push_back("basis sizes invalid");
    positive(dt, "time.dt");
    positive(window, "time.window");
    positive(horizon, "time.horizon");
    positive(tol_picard, "solver.tol_picard");
    positive(tol_fp, "solver.tol_fp");
    if (!(fp_damping > 0 && fp_damping <= 1)) issues.push_back("solver.fp_damping in (0,1]");
    if (!(kappa_fraction > 0 && kappa_fraction < 1))
        issues.push_back("solver.kappa_fraction in (0,1)");
    const std::vector<std::string> fk = {"none", "constant", "gaussian-pulse", "traveling-wave"};
    if (std::find(fk.begin(), fk.end(), f_kind) == fk.end())
        issues.push_back("forcing.f '" + f_kind + "' unknown");
    if (std::find(fk.begin(), fk.end(), g_kind) == fk.end())
        issues.push_back("forcing.g '" + g_kind + "' unknown");
    const std::vector<std::string> ik = {"zero", "mode"};
    if (std::find(ik.begin(), ik.end(), eta0_kind) == ik.end())
        issues.push_back("init.eta0 '" + eta0_kind + "' unknown");
    if (std::find(ik.begin(), ik.end(), eta1_kind) == ik.end())
        issues.push_back("init.eta1 '" + eta1_kind + "' unknown");
    if (!issues.empty()) throw ConfigError("invalid configuration", issues);
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    for (const auto& b : bindings()) os << b.section << "." << b.key << "=" << b.get(*this) << "\n";
    return os.str();
}

std::string RunConfig::hash() const {
    const std::string text = canonical();
    unsigned long long h = 1469598103934665603ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", h);
    return buf;
}

void set_config_key(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) throw ConfigError("expected section.key: '" + dotted_key + "'");
    const std::string section = dotted_key.substr(0, dot);
    const std::string key = dotted_key.substr(dot + 1);
    for (const auto& b : bindings()) {
        if (b.section == section && b.key == key) {
            b.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown key '" + dotted_key + "'");
}

std::string get_config_key(const RunConfig& cfg, const std::string& dotted_key) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) throw ConfigError("expected section.key: '" + dotted_key + "'");
    const std::string section = dotted_key.substr(0, dot);
    const std::string key = dotted_key.substr(dot + 1);
    for (const auto& b : bindings()) {
        if (b.section == section && b.key == key) return b.get(cfg);
    }
    throw ConfigError("unknown key '" + dotted_key + "'");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::vector<std::string> issues;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hashpos = line.find_first_of("#;");
        if (hashpos != std::string::npos) line = line.substr(0, hashpos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back("line " + std::to_string(lineno) + ": malformed section");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        bool found = false;
        for (const auto& b : bindings()) {
            if (b.section == section && b.key == key) {
                try {
                    b.set(cfg, value);
                } catch (const ConfigError& e) {
                    issues.push_back("line " + std::to_string(lineno) + ": " + e.what());
                }
                found = true;
                break;
            }
        }
        if (!found)
            issues.push_back("line " + std::to_string(lineno) + ": unknown key '" + section +
                             "." + key + "'");
    }
    if (!issues.empty()) throw ConfigError("config parse failed", issues);
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_text(os.str());
}

void apply_env_overrides(RunConfig& cfg) {
    std::vector<std::string> issues;
    for (const auto& b : bindings()) {
        std::string name = "KFSI_" + upper(b.section) + "_" + upper(b.key);
        if (const char* v = std::getenv(name.c_str())) {
            try {
                b.set(cfg, v);
            } catch (const ConfigError& e) {
                issues.push_back(name + ": " + e.what());
            }
        }
    }
    if (!issues.empty()) throw ConfigError("environment overrides failed", issues);
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.geometry = "flat-channel";
    c.Lx = c.Ly = 1.0;
    c.height = 0.5;
    c.n1 = c.n2 = 12;
    c.n_fiber = 10;
    c.n_s = 8;
    c.n_f = 32;
    c.elastic = ElasticParams{2.0, 1.0, 0.1, 1.0, 1.0};
    c.mu0 = 1.0;
    c.delta = 1.0;
    c.p = 2.5;
    c.eps = 0.05;
    c.eps_tilde = 1e-3;
    c.cutoff_scale = 1.0;
    c.dt = 5e-4;
    c.window = 0.25;
    c.horizon = 1.0;
    if (name == "zero") {
        // all defaults: zero data, zero forcing
    } else if (name == "plate-pulse") {
        c.g_kind = "gaussian-pulse";
        c.g_amp = 0.4;
        c.g_t0 = 0.1;
        c.g_sigma = 0.04;
        c.g_mode = 1;
    } else if (name == "breakdown") {
        // strong steady pressure-like body force with a modal profile (a
        // spatially constant force is hydrostatic in the solenoidal space);
        // soft thin plate
        c.elastic.eps0 = 0.05;
        c.mu0 = 0.2;  // weak squeeze-film resistance lets the plate reach the bound
        c.f_kind = "traveling-wave";
        c.f_speed = 0.0;
        c.f_mode = 1;
        c.f_amp = -8.0;
        c.horizon = 6.0;
        c.window = 0.2;
        c.dt = 1e-3;
        c.n_f = 16;
        c.n_s = 4;
        c.p = 2.0;
        c.eps_tilde = 0.0;
    } else if (name == "stress") {
        // pulse violent enough to throw iterates out of the convex set
        c.elastic.eps0 = 0.05;
        c.g_kind = "gaussian-pulse";
        c.g_amp = 150.0;
        c.g_t0 = 0.08;
        c.g_sigma = 0.03;
        c.g_mode = 1;
        c.window = 0.5;
        c.horizon = 0.5;
        c.dt = 1e-3;
        c.n_s = 4;
        c.n_f = 16;
    } else if (name == "oscillator") {
        c.fluid = false;
        c.n_s = 1;
        c.n_f = 0;
        c.eta0_kind = "mode";
        c.eta0_amp = 0.05;
        c.eta0_mode = 0;
        c.eps = 0.0;  // pure oscillator; tests override for the parabolized variant
        c.eps_tilde = 0.0;
        c.horizon = 1.0;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

Scenario build_scenario(const RunConfig& cfg) {
    cfg.validate();
    Scenario sc;
    if (cfg.geometry == "flat-channel") {
        sc.surface = std::make_unique<ReferenceSurface>(
            make_flat_patch(cfg.Lx, cfg.Ly, cfg.height, cfg.n1, cfg.n2));
    } else if (cfg.geometry == "flat-channel-2d") {
        sc.surface = std::make_unique<ReferenceSurface>(
            make_flat_patch_2d(cfg.Lx, cfg.height, cfg.n1));
    } else if (cfg.geometry == "sphere") {
        sc.surface = std::make_unique<ReferenceSurface>(
            make_sphere(cfg.radius, cfg.n1, cfg.n2, cfg.cap_angle));
    } else if (cfg.geometry == "circle") {
        sc.surface = std::make_unique<ReferenceSurface>(make_circle(cfg.radius, cfg.n1));
    } else if (cfg.geometry == "cylinder") {
        sc.surface = std::make_unique<ReferenceSurface>(
            make_cylinder(cfg.radius, cfg.length, cfg.n1, cfg.n2));
    }
    const int basis_count = std::max(cfg.n_s, 4);
    sc.shell = std::make_unique<ShellBasis>(
        make_shell_basis(*sc.surface, cfg.elastic, basis_count));
    sc.elastic = cfg.elastic;
    sc.law = StressLaw{cfg.mu0, cfg.delta, cfg.p, 0.0};
    sc.gcfg.n_s = cfg.n_s;
    sc.gcfg.n_f = cfg.n_f;
    sc.gcfg.n_fiber = cfg.n_fiber;
    sc.gcfg.profile_cap = cfg.profile_cap;
    sc.gcfg.dt = cfg.dt;
    sc.gcfg.eps = cfg.eps;
    sc.gcfg.eps_tilde = cfg.eps_tilde;
    sc.gcfg.tol_picard = cfg.tol_picard;
    sc.gcfg.max_picard = cfg.max_picard;
    sc.gcfg.picard_damping = cfg.picard_damping;
    sc.gcfg.fluid_enabled = cfg.fluid;
    sc.ccfg.window = cfg.window;
    sc.ccfg.horizon = cfg.horizon;
    sc.ccfg.tol_fp = cfg.tol_fp;
    sc.ccfg.max_fp_iter = cfg.max_fp_iter;
    sc.ccfg.fp_damping = cfg.fp_damping;
    sc.ccfg.kappa_fraction = cfg.kappa_fraction;
    sc.ccfg.max_halvings = cfg.max_halvings;
    sc.fluid = cfg.fluid;
    if (cfg.fluid &&
        (cfg.geometry == "flat-channel" || cfg.geometry == "flat-channel-2d")) {
        sc.basis = std::make_unique<CoupledBasis>(build_basis(
            *sc.surface, *sc.shell, cfg.n_s, cfg.n_f, cfg.n_fiber, cfg.profile_cap));
    }

    // forcing closures
    const int vax = (cfg.geometry == "flat-channel-2d") ? 1 : 2;
    const double L1 = sc.surface->len1;
    if (cfg.f_kind != "none") {
        const std::string kind = cfg.f_kind;
        const double amp = cfg.f_amp, t0 = cfg.f_t0, sig = cfg.f_sigma, speed = cfg.f_speed;
        const int mode = cfg.f_mode;
        sc.forcing.f = [=](double t, const Vec3& y) {
            Vec3 f = Vec3::Zero();
            if (kind == "constant") {
                f[vax] = amp;
            } else if (kind == "gaussian-pulse") {
                const double arg = (t - t0) / sig;
                f[vax] = amp * std::exp(-arg * arg);
            } else if (kind == "traveling-wave") {
                f[vax] = amp * std::cos(2.0 * kPi * mode * (y[0] / L1) - speed * t);
            }
            return f;
        };
    }
    if (cfg.g_kind != "none") {
        const std::string kind = cfg.g_kind;
        const double amp = cfg.g_amp, t0 = cfg.g_t0, sig = cfg.g_sigma, speed = cfg.g_speed;
        const int mode = cfg.g_mode;
        sc.forcing.g = [=](double t, double a, double) {
            if (kind == "constant") return amp;
            if (kind == "gaussian-pulse") {
                const double arg = (t - t0) / sig;
                return amp * std::exp(-arg * arg) * std::cos(2.0 * kPi * mode * a / L1);
            }
            return amp * std::cos(2.0 * kPi * mode * a / L1 - speed * t);
        };
    }

    // initial data
    const int ncoef = cfg.fluid ? cfg.n_s : basis_count;
    sc.input.eta0_coef = VecX::Zero(ncoef);
    sc.input.eta1_coef = VecX::Zero(ncoef);
    if (cfg.eta0_kind == "mode" && ncoef > 0)
        sc.input.eta0_coef[std::min(cfg.eta0_mode, ncoef - 1)] = cfg.eta0_amp;
    if (cfg.eta1_kind == "mode" && ncoef > 0)
        sc.input.eta1_coef[std::min(cfg.eta1_mode, ncoef - 1)] = cfg.eta1_amp;
    return sc;
}

}  // namespace kfsi
