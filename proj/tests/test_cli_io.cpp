// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "kfsi/io.hpp"
#include "kfsi/verify.hpp"

using namespace kfsi;

TEST_CASE("config parsing") {
    SUBCASE("round trip through the canonical form preserves the hash") {
        RunConfig cfg = preset_config("plate-pulse");
        const std::string canon = cfg.canonical();
        // the canonical dump parses section-free lines, so rebuild as sections
        std::string text;
        std::string last_section;
        for (size_t pos = 0; pos < canon.size();) {
            const size_t eol = canon.find('\n', pos);
            const std::string line = canon.substr(pos, eol - pos);
            pos = eol + 1;
            const size_t dot = line.find('.');
            const std::string section = line.substr(0, dot);
            if (section != last_section) {
                text += "[" + section + "]\n";
                last_section = section;
            }
            text += line.substr(dot + 1) + "\n";
        }
        const RunConfig back = parse_config_text(text);
        CHECK(back.hash() == cfg.hash());
    }
    SUBCASE("all violations are reported at once") {
        try {
            RunConfig cfg;
            cfg.geometry = "moebius";
            cfg.dt = -1.0;
            cfg.p = 1.0;
            cfg.validate();
            CHECK(false);
        } catch (const ConfigError& e) {
            CHECK(e.issues.size() >= 3);
        }
    }
    SUBCASE("unknown keys are rejected with line numbers") {
        CHECK_THROWS_AS(parse_config_text("[geometry]\nbogus = 1\n"), ConfigError);
    }
    SUBCASE("p > 6/5 is enforced") {
        RunConfig cfg = preset_config("zero");
        cfg.p = 1.1;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("environment overrides") {
        RunConfig cfg = preset_config("zero");
        setenv("KFSI_TIME_DT", "0.042", 1);
        apply_env_overrides(cfg);
        unsetenv("KFSI_TIME_DT");
        CHECK(cfg.dt == 0.042);
    }
    SUBCASE("hash changes with any field") {
        RunConfig a = preset_config("zero");
        RunConfig b = a;
        b.n_s += 1;
        CHECK(a.hash() != b.hash());
    }
    SUBCASE("unknown preset is rejected") {
        CHECK_THROWS_AS(preset_config("warp-drive"), ConfigError);
    }
}

TEST_CASE("ledger csv is deterministic and carries the documented schema") {
    EnergyLedger ledger;
    EnergyRow row;
    row.t = 0.125;
    row.e_kin_fluid = 1.0 / 3.0;
    row.eta_sup = 1e-17;
    row.tau_val = 1.0;
    ledger.rows.push_back(row);
    const char* path = "test_ledger_tmp.csv";
    write_ledger_csv(path, ledger);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "t,E_kin_fluid,E_kin_shell,E_koiter,dissipation,power,residual,eta_sup,tau");
    std::string row1;
    std::getline(in, row1);
    in.close();
    write_ledger_csv(path, ledger);
    std::ifstream in2(path);
    std::string header2, row2;
    std::getline(in2, header2);
    std::getline(in2, row2);
    CHECK(row1 == row2);
    std::remove(path);
}

TEST_CASE("snapshot binary round trip") {
    std::vector<VecX> hist;
    for (int i = 0; i < 5; ++i) {
        VecX v(3);
        v << i * 1.0, i * 2.5, -i * 0.125;
        hist.push_back(v);
    }
    const char* path = "test_snapshot_tmp.bin";
    write_snapshot(path, hist, 2, 0.0, 1e-3);
    const Snapshot snap = read_snapshot(path);
    CHECK(snap.version == 1);
    CHECK(snap.n_s == 2);
    CHECK(snap.dt == 1e-3);
    REQUIRE(snap.alpha.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK((snap.alpha[i] - hist[i]).cwiseAbs().maxCoeff() == 0.0);
    // the magic is pinned
    std::ifstream in(path, std::ios::binary);
    char magic[16];
    in.read(magic, 16);
    CHECK(std::string(magic, 9) == "KFSI-SNAP");
    std::remove(path);
}

TEST_CASE("scenario construction from presets") {
    for (const char* name : {"zero", "plate-pulse", "breakdown", "stress", "oscillator"}) {
        const RunConfig cfg = preset_config(name);
        CHECK_NOTHROW(cfg.validate());
    }
    const Scenario sc = build_scenario(preset_config("zero"));
    CHECK(sc.basis != nullptr);
    CHECK(sc.shell->count >= sc.gcfg.n_s);
}

TEST_CASE("verify json is schema-shaped") {
    VerifyOptions opt;
    opt.quick = true;
    const auto results = verify_suite("stress", opt);
    const std::string json = verify_json(results);
    CHECK(json.find("\"schema\": \"kfsi-verify-v1\"") != std::string::npos);
    CHECK(json.find("\"checks\"") != std::string::npos);
    CHECK_THROWS_AS(verify_suite("bogus", opt), ArgumentError);
}

TEST_CASE("fit order on a clean second-order sequence") {
    CHECK(fit_order({1.0, 0.25, 0.0625}) == doctest::Approx(2.0));
}
