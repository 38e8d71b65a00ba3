#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fsi/diagnostics.hpp"
#include "fsi/driver.hpp"
#include "fsi/ledger.hpp"

namespace fsi {

// Doubles are written as "{:.16e}": 17 significant digits, locale independent.
std::string format_double(double v);

void write_ledger_csv(std::ostream& out, const EnergyLedger& ledger);
std::string ledger_csv(const EnergyLedger& ledger);
EnergyLedger parse_ledger_csv(const std::string& text);
void save_ledger_csv(const std::string& path, const EnergyLedger& ledger);
EnergyLedger load_ledger_csv(const std::string& path);

// Named scalar fields on a 2D lattice, row-major with x fastest.
struct FieldSnapshot {
  int dimension = 2;
  std::string location = "cell";  // cell | node
  Index2 resolution{0, 0};
  Vec2 origin = Vec2::Zero();
  Vec2 extent = Vec2::Ones();
  double time = 0.0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> fields;

  bool operator==(const FieldSnapshot&) const = default;
};

// rho and cell-centred u, v.
FieldSnapshot fluid_snapshot(const FluidState& s);
// Reference grid with nodal x, y, vx, vy.
FieldSnapshot solid_snapshot(const DeformationField& s);
DeformationField deformation_from_snapshot(const FieldSnapshot& s);

std::string snapshot_text(const FieldSnapshot& s);
FieldSnapshot parse_snapshot(const std::string& text);
void save_snapshot(const std::string& path, const FieldSnapshot& s);
FieldSnapshot load_snapshot(const std::string& path);
// Legacy structured-points VTK with one scalar array per field.
void save_vtk(const std::string& path, const FieldSnapshot& s);

std::string classification_report(const ContactClassification& c, const LemmaReport& lemmas, double interface);
std::string cantor_report(const CantorProfile& p, double seconds);
std::string windows_csv(const std::vector<WindowReport>& windows);
std::string mm_records_csv(const std::vector<MmStepRecord>& records, double dt, double h);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

struct OutputOptions {
  bool vtk = false;
};

// ledger.csv, windows.csv, mm_steps.csv, warnings.txt and snapshots/ under dir.
// Returns the paths written.
std::vector<std::string> write_outputs(const RunResult& run, const std::string& dir, const OutputOptions& opts = {});

}  // namespace fsi
