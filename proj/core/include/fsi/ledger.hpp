#pragma once

#include <array>
#include <string_view>
#include <vector>

namespace fsi {

struct LedgerRow {
  double time = 0.0;
  double kinetic_fluid = 0.0;
  double pressure_pot = 0.0;
  double artificial_pot = 0.0;
  double visc_diss_cum = 0.0;
  double kinetic_solid = 0.0;
  double E = 0.0;
  double K = 0.0;
  double R_cum = 0.0;
  double penalty_match_cum = 0.0;
  double penalty_U_cum = 0.0;
  double sink_work_cum = 0.0;
  double damping_work_cum = 0.0;
  double total = 0.0;
  double violation = 0.0;

  static constexpr std::size_t column_count = 15;
  static const std::array<std::string_view, column_count>& columns();
  std::array<double, column_count> values() const;
  static LedgerRow from_values(const std::array<double, column_count>& v);

  double cumulative() const {
    return visc_diss_cum + R_cum + penalty_match_cum + penalty_U_cum + sink_work_cum + damping_work_cum;
  }
  bool operator==(const LedgerRow&) const = default;
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;

  double initial_total() const { return rows.empty() ? 0.0 : rows.front().total; }
  // Largest |total(t) - total(0)| relative to |total(0)|.
  double max_relative_drift() const;
};

struct LedgerViolation {
  std::size_t row = 0;
  double time = 0.0;
  double excess = 0.0;  // total + cumulative - total(0) - budget
};

// Rows where total(t) + cumulative(t) > total(0) + budget(t).
std::vector<LedgerViolation> ledger_check(const EnergyLedger& ledger, double budget);
std::vector<LedgerViolation> ledger_check(const EnergyLedger& ledger, const std::vector<double>& budget);

// Cumulative columns that decrease between consecutive rows, as row indices.
std::vector<std::size_t> monotonicity_failures(const EnergyLedger& ledger);

}  // namespace fsi
