#include "fsi/ledger.hpp"

#include <algorithm>
#include <cmath>

#include "fsi/error.hpp"

namespace fsi {

const std::array<std::string_view, LedgerRow::column_count>& LedgerRow::columns() {
  static const std::array<std::string_view, column_count> names{
      "time",           "kinetic_fluid",     "pressure_pot",  "artificial_pot", "visc_diss_cum",
      "kinetic_solid",  "E",                 "K",             "R_cum",          "penalty_match_cum",
      "penalty_U_cum",  "sink_work_cum",     "damping_work_cum", "total",       "violation"};
  return names;
}

std::array<double, LedgerRow::column_count> LedgerRow::values() const {
  return {time,   kinetic_fluid,     pressure_pot,  artificial_pot, visc_diss_cum,
          kinetic_solid, E,          K,             R_cum,          penalty_match_cum,
          penalty_U_cum, sink_work_cum, damping_work_cum, total,    violation};
}

LedgerRow LedgerRow::from_values(const std::array<double, column_count>& v) {
  LedgerRow r;
  r.time = v[0];
  r.kinetic_fluid = v[1];
  r.pressure_pot = v[2];
  r.artificial_pot = v[3];
  r.visc_diss_cum = v[4];
  r.kinetic_solid = v[5];
  r.E = v[6];
  r.K = v[7];
  r.R_cum = v[8];
  r.penalty_match_cum = v[9];
  r.penalty_U_cum = v[10];
  r.sink_work_cum = v[11];
  r.damping_work_cum = v[12];
  r.total = v[13];
  r.violation = v[14];
  return r;
}

double EnergyLedger::max_relative_drift() const {
  if (rows.empty()) return 0.0;
  const double t0 = rows.front().total;
  double d = 0.0;
  for (const LedgerRow& r : rows) d = std::max(d, std::abs(r.total - t0));
  return t0 != 0.0 ? d / std::abs(t0) : d;
}

std::vector<LedgerViolation> ledger_check(const EnergyLedger& ledger, const std::vector<double>& budget) {
  if (budget.size() != ledger.rows.size())
    throw InvalidArgumentError("budget has " + std::to_string(budget.size()) + " entries for " +
                               std::to_string(ledger.rows.size()) + " rows");
  std::vector<LedgerViolation> out;
  const double t0 = ledger.initial_total();
  for (std::size_t i = 0; i < ledger.rows.size(); ++i) {
    const LedgerRow& r = ledger.rows[i];
    const double excess = r.total + r.cumulative() - t0 - budget[i];
    if (excess > 0.0 || !std::isfinite(excess)) out.push_back({i, r.time, excess});
  }
  return out;
}

std::vector<LedgerViolation> ledger_check(const EnergyLedger& ledger, double budget) {
  return ledger_check(ledger, std::vector<double>(ledger.rows.size(), budget));
}

std::vector<std::size_t> monotonicity_failures(const EnergyLedger& ledger) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < ledger.rows.size(); ++i) {
    const LedgerRow& a = ledger.rows[i - 1];
    const LedgerRow& b = ledger.rows[i];
    if (b.visc_diss_cum < a.visc_diss_cum || b.R_cum < a.R_cum || b.penalty_match_cum < a.penalty_match_cum ||
        b.penalty_U_cum < a.penalty_U_cum || b.sink_work_cum < a.sink_work_cum ||
        b.damping_work_cum < a.damping_work_cum)
      out.push_back(i);
  }
  return out;
}

}  // namespace fsi
