// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "kfsi/config.hpp"

namespace kfsi {

// Ledger CSV schema (comma separated, '.' decimal, header row, UTF-8):
//   t, E_kin_fluid, E_kin_shell, E_koiter, dissipation, power, residual,
//   eta_sup, tau
// dissipation and power are instantaneous rates; residual is the normalized
// energy-identity residual accumulated from the first row.
void write_ledger_csv(const std::string& path, const EnergyLedger& ledger);

// Snapshot binary: 16-byte magic "KFSI-SNAP" + 7 NUL, u32 version, u32 rows,
// u32 alpha size, u32 n_s, f64 t0, f64 dt, then the alpha history row-major
// as little-endian 64-bit floats.
void write_snapshot(const std::string& path, const std::vector<VecX>& alpha_history,
                    int n_s, double t0, double dt);
struct Snapshot {
    unsigned version = 0;
    int n_s = 0;
    double t0 = 0, dt = 0;
    std::vector<VecX> alpha;
};
Snapshot read_snapshot(const std::string& path);

std::string outcome_json(const RunOutcome& outcome, const RunConfig& cfg);
std::string fixed_point_json(const FixedPointReport& report, const RunConfig& cfg);
std::string sweep_json(const std::vector<SweepCell>& cells, const RunConfig& cfg);
std::string certification_json(const StructureReport& report);

void write_text(const std::string& path, const std::string& text);

// debug/export helpers
void export_surface_csv(const std::string& path, const ReferenceSurface& s,
                        const Displacement& eta);
void export_matrix_coord(const std::string& path, const MatX& m);
void export_quadrature_csv(const std::string& path, const VolumeQuadrature& q);

}  // namespace kfsi
