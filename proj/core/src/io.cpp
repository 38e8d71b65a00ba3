#include "fsi/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fsi/error.hpp"

namespace fsi {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out = split(text, '\n');
  for (std::string& l : out)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

double to_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw IoError(context + ": cannot parse number '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& context) {
  int v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw IoError(context + ": cannot parse integer '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.16e}", v); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_ledger_csv(std::ostream& out, const EnergyLedger& ledger) {
  out << ledger_csv(ledger);
}

std::string ledger_csv(const EnergyLedger& ledger) {
  std::string s;
  const auto& cols = LedgerRow::columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) s += ',';
    s += cols[c];
  }
  s += '\n';
  for (const LedgerRow& r : ledger.rows) {
    const auto v = r.values();
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (c) s += ',';
      s += format_double(v[c]);
    }
    s += '\n';
  }
  return s;
}

EnergyLedger parse_ledger_csv(const std::string& text) {
  const std::vector<std::string> lines = lines_of(text);
  if (lines.empty()) throw IoError("ledger csv: missing header");
  const auto& cols = LedgerRow::columns();
  const std::vector<std::string> header = split(lines[0], ',');
  if (header.size() != cols.size()) throw IoError("ledger csv: expected " + std::to_string(cols.size()) + " columns");
  for (std::size_t c = 0; c < cols.size(); ++c)
    if (header[c] != cols[c]) throw IoError("ledger csv: column " + std::to_string(c + 1) + " is '" + header[c] +
                                            "', expected '" + std::string(cols[c]) + "'");
  EnergyLedger out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> f = split(lines[i], ',');
    const std::string ctx = "ledger csv line " + std::to_string(i + 1);
    if (f.size() != cols.size()) throw IoError(ctx + ": wrong field count");
    std::array<double, LedgerRow::column_count> v{};
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = to_double(f[c], ctx);
    out.rows.push_back(LedgerRow::from_values(v));
  }
  return out;
}

void save_ledger_csv(const std::string& path, const EnergyLedger& ledger) { write_text(path, ledger_csv(ledger)); }

EnergyLedger load_ledger_csv(const std::string& path) {
  try {
    return parse_ledger_csv(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

FieldSnapshot fluid_snapshot(const FluidState& s) {
  const FluidGrid& g = s.grid;
  const int nx = g.resolution[0], ny = g.resolution[1];
  FieldSnapshot out;
  out.location = "cell";
  out.resolution = g.resolution;
  out.origin = g.origin;
  out.extent = g.extent;
  out.time = s.time;
  out.names = {"rho", "u", "v"};
  out.fields.assign(3, std::vector<double>(static_cast<std::size_t>(nx) * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const auto c = static_cast<std::size_t>(i + nx * j);
      out.fields[0][c] = s.rho[i + nx * j];
      out.fields[1][c] = 0.5 * (s.u[i + (nx + 1) * j] + s.u[i + 1 + (nx + 1) * j]);
      out.fields[2][c] = 0.5 * (s.v[i + nx * j] + s.v[i + nx * (j + 1)]);
    }
  return out;
}

FieldSnapshot solid_snapshot(const DeformationField& s) {
  FieldSnapshot out;
  out.location = "node";
  out.resolution = s.grid.resolution;
  out.origin = s.grid.origin;
  out.extent = s.grid.extent;
  out.time = s.time;
  out.names = {"x", "y", "vx", "vy"};
  const int n = s.node_count();
  out.fields.assign(4, std::vector<double>(static_cast<std::size_t>(n)));
  for (int k = 0; k < n; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    out.fields[0][kk] = s.positions[2 * k];
    out.fields[1][kk] = s.positions[2 * k + 1];
    out.fields[2][kk] = s.velocity[2 * k];
    out.fields[3][kk] = s.velocity[2 * k + 1];
  }
  return out;
}

DeformationField deformation_from_snapshot(const FieldSnapshot& s) {
  if (s.location != "node") throw IoError("deformation snapshot must hold node data");
  auto field = [&](const char* name) -> const std::vector<double>* {
    for (std::size_t i = 0; i < s.names.size(); ++i)
      if (s.names[i] == name) return &s.fields[i];
    return nullptr;
  };
  const std::vector<double>* x = field("x");
  const std::vector<double>* y = field("y");
  if (x == nullptr || y == nullptr) throw IoError("deformation snapshot needs fields x and y");
  DeformationField d(SolidGrid(s.origin, s.extent, s.resolution));
  d.time = s.time;
  const std::vector<double>* vx = field("vx");
  const std::vector<double>* vy = field("vy");
  for (int k = 0; k < d.node_count(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    d.positions[2 * k] = (*x)[kk];
    d.positions[2 * k + 1] = (*y)[kk];
    if (vx != nullptr && vy != nullptr) {
      d.velocity[2 * k] = (*vx)[kk];
      d.velocity[2 * k + 1] = (*vy)[kk];
    }
  }
  return d;
}

std::string snapshot_text(const FieldSnapshot& s) {
  const int nx = s.resolution[0], ny = s.resolution[1];
  std::string out = "fsi-snapshot 1\n";
  out += fmt::format("dimension {}\n", s.dimension);
  out += "location " + s.location + "\n";
  out += fmt::format("resolution {} {}\n", nx, ny);
  out += "origin " + format_double(s.origin.x()) + " " + format_double(s.origin.y()) + "\n";
  out += "extent " + format_double(s.extent.x()) + " " + format_double(s.extent.y()) + "\n";
  out += "time " + format_double(s.time) + "\n";
  out += "fields";
  for (const std::string& n : s.names) out += " " + n;
  out += "\n";
  for (std::size_t f = 0; f < s.fields.size(); ++f) {
    out += "field " + s.names[f] + "\n";
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (i) out += ' ';
        out += format_double(s.fields[f][static_cast<std::size_t>(i + nx * j)]);
      }
      out += '\n';
    }
  }
  return out;
}

FieldSnapshot parse_snapshot(const std::string& text) {
  const std::vector<std::string> lines = lines_of(text);
  std::size_t i = 0;
  auto next = [&](const char* key) {
    if (i >= lines.size()) throw IoError(std::string("snapshot: missing '") + key + "' line");
    std::vector<std::string> t = tokens(lines[i]);
    if (t.empty() || t[0] != key)
      throw IoError("snapshot line " + std::to_string(i + 1) + ": expected '" + key + "'");
    ++i;
    return t;
  };
  const std::string ctx = "snapshot";
  auto magic = next("fsi-snapshot");
  if (magic.size() != 2 || magic[1] != "1") throw IoError("snapshot: unsupported version");
  FieldSnapshot s;
  auto t = next("dimension");
  if (t.size() != 2) throw IoError("snapshot: bad dimension line");
  s.dimension = to_int(t[1], ctx);
  t = next("location");
  if (t.size() != 2 || (t[1] != "cell" && t[1] != "node")) throw IoError("snapshot: location must be cell or node");
  s.location = t[1];
  t = next("resolution");
  if (t.size() != 3) throw IoError("snapshot: bad resolution line");
  s.resolution = {to_int(t[1], ctx), to_int(t[2], ctx)};
  if (s.resolution[0] < 1 || s.resolution[1] < 1) throw IoError("snapshot: resolution must be positive");
  t = next("origin");
  if (t.size() != 3) throw IoError("snapshot: bad origin line");
  s.origin = Vec2(to_double(t[1], ctx), to_double(t[2], ctx));
  t = next("extent");
  if (t.size() != 3) throw IoError("snapshot: bad extent line");
  s.extent = Vec2(to_double(t[1], ctx), to_double(t[2], ctx));
  t = next("time");
  if (t.size() != 2) throw IoError("snapshot: bad time line");
  s.time = to_double(t[1], ctx);
  t = next("fields");
  s.names.assign(t.begin() + 1, t.end());
  const int nx = s.resolution[0], ny = s.resolution[1];
  for (const std::string& name : s.names) {
    t = next("field");
    if (t.size() != 2 || t[1] != name) throw IoError("snapshot: expected block for field '" + name + "'");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j, ++i) {
      if (i >= lines.size()) throw IoError("snapshot: field '" + name + "' is truncated");
      const std::vector<std::string> row = tokens(lines[i]);
      if (static_cast<int>(row.size()) != nx)
        throw IoError("snapshot line " + std::to_string(i + 1) + ": expected " + std::to_string(nx) + " values");
      for (const std::string& v : row) values.push_back(to_double(v, ctx));
    }
    s.fields.push_back(std::move(values));
  }
  return s;
}

void save_snapshot(const std::string& path, const FieldSnapshot& s) { write_text(path, snapshot_text(s)); }

FieldSnapshot load_snapshot(const std::string& path) {
  try {
    return parse_snapshot(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void save_vtk(const std::string& path, const FieldSnapshot& s) {
  const int nx = s.resolution[0], ny = s.resolution[1];
  const bool cell = s.location == "cell";
  const Vec2 spacing(s.extent.x() / (cell ? nx : std::max(nx - 1, 1)), s.extent.y() / (cell ? ny : std::max(ny - 1, 1)));
  const Vec2 origin = cell ? Vec2(s.origin + 0.5 * spacing) : s.origin;
  std::string out = "# vtk DataFile Version 3.0\n";
  out += "fsi snapshot t=" + format_double(s.time) + "\n";
  out += "ASCII\nDATASET STRUCTURED_POINTS\n";
  out += fmt::format("DIMENSIONS {} {} 1\n", nx, ny);
  out += "ORIGIN " + format_double(origin.x()) + " " + format_double(origin.y()) + " 0\n";
  out += "SPACING " + format_double(spacing.x()) + " " + format_double(spacing.y()) + " 1\n";
  out += fmt::format("POINT_DATA {}\n", nx * ny);
  for (std::size_t f = 0; f < s.fields.size(); ++f) {
    out += "SCALARS " + s.names[f] + " double 1\nLOOKUP_TABLE default\n";
    for (double v : s.fields[f]) out += format_double(v) + "\n";
  }
  write_text(path, out);
}

std::string classification_report(const ContactClassification& c, const LemmaReport& lemmas, double interface) {
  std::string out;
  out += fmt::format("boundary_nodes {}\n", c.nodes.size());
  out += fmt::format("wall_tol {}\nself_tol {}\nref_separation {}\n", format_double(c.wall_tol),
                     format_double(c.self_tol), format_double(c.ref_separation));
  out += fmt::format("count_C {}\ncount_I {}\ncount_N {}\n", c.count(ContactLabel::C), c.count(ContactLabel::I),
                     c.count(ContactLabel::N));
  out += "interface_area " + format_double(interface) + "\n";
  auto check = [&](const LemmaCheck& l) {
    out += fmt::format("check {} {}", l.name, l.passed ? "pass" : "fail");
    if (!l.witness.empty()) {
      out += " witness";
      for (int w : l.witness) out += fmt::format(" {}", w);
    }
    out += "\n";
  };
  check(lemmas.injective_on_C);
  check(lemmas.multiplicity);
  check(lemmas.partition);
  out += fmt::format("max_multiplicity {}\n", lemmas.max_multiplicity);
  out += "labels\n";
  for (std::size_t i = 0; i < c.nodes.size(); ++i)
    out += fmt::format("{} {}\n", c.nodes[i], static_cast<char>(c.labels[i]));
  return out;
}

std::string cantor_report(const CantorProfile& p, double seconds) {
  std::string out;
  out += fmt::format("levels {}\nresolution {}\n", p.levels, p.f.size());
  out += "positivity_measure " + format_double(p.positivity_measure) + "\n";
  out += "complement_measure " + format_double(p.complement_measure) + "\n";
  out += "exact_positivity " + format_double(p.exact_positivity) + "\n";
  out += "exact_complement " + format_double(1.0 - p.exact_positivity) + "\n";
  out += "seconds " + format_double(seconds) + "\n";
  out += "level width amplitude\n";
  for (int k = 0; k < p.levels; ++k)
    out += fmt::format("{} {} {}\n", k, format_double(p.widths[static_cast<std::size_t>(k)]),
                       format_double(p.amplitudes[static_cast<std::size_t>(k)]));
  return out;
}

std::string windows_csv(const std::vector<WindowReport>& windows) {
  std::string out =
      "window,time,min_wall_distance,min_pair_distance,min_det,max_K,interface_area,mismatch_sq_dt,mass,"
      "max_mass_in_mask,min_rho,clipped_mass,center_x,center_y,impulse_x,impulse_y,fluid_substeps";
  std::size_t collars = windows.empty() ? 0 : windows.front().collar.size();
  for (std::size_t c = 0; c < collars; ++c) out += fmt::format(",collar_{}", c);
  out += "\n";
  for (const WindowReport& w : windows) {
    out += fmt::format("{}", w.window);
    for (double v : {w.time, w.min_wall_distance, w.min_pair_distance, w.min_det, w.max_K, w.interface_area,
                     w.mismatch_sq_dt, w.mass, w.max_mass_in_mask, w.min_rho, w.clipped_mass, w.center.x(),
                     w.center.y(), w.fluid_impulse.x(), w.fluid_impulse.y()})
      out += "," + format_double(v);
    out += fmt::format(",{}", w.fluid_substeps);
    for (std::size_t c = 0; c < collars; ++c) out += "," + format_double(c < w.collar.size() ? w.collar[c] : 0.0);
    out += "\n";
  }
  return out;
}

std::string mm_records_csv(const std::vector<MmStepRecord>& records, double dt, double h) {
  std::string out =
      "step,E_before,K_before,E_after,K_after,R_eps,mismatch_sq,U_sq,v_sq,J_start,J_end,residual,tolerance,"
      "step_norm,iterations,estimate_gap,estimate_budget,holds\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const MmStepRecord& r = records[i];
    out += fmt::format("{}", i);
    for (double v : {r.E_before, r.K_before, r.E_after, r.K_after, r.R_eps, r.mismatch_sq, r.U_sq, r.v_sq,
                     r.J_start, r.J_end, r.residual, r.tolerance, r.step_norm})
      out += "," + format_double(v);
    out += fmt::format(",{},{},{},{}\n", r.iterations, format_double(r.estimate_gap(dt, h)),
                       format_double(r.estimate_budget()), r.estimate_holds(dt, h) ? 1 : 0);
  }
  return out;
}

std::vector<std::string> write_outputs(const RunResult& run, const std::string& dir, const OutputOptions& opts) {
  std::vector<std::string> written;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "snapshots", ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  auto put = [&](const fs::path& p, const std::string& text) {
    write_text(p.string(), text);
    written.push_back(p.string());
  };
  const fs::path root(dir);
  put(root / "ledger.csv", ledger_csv(run.ledger));
  put(root / "windows.csv", windows_csv(run.windows));
  const SspParams ssp = run.params.ssp_params();
  put(root / "mm_steps.csv", mm_records_csv(run.mm_records, ssp.dt(), ssp.h));
  std::string warn;
  for (const std::string& w : run.warnings) warn += w + "\n";
  put(root / "warnings.txt", warn);
  for (const Snapshot& s : run.snapshots) {
    const std::string stem = fmt::format("w{:05d}", s.window);
    const FieldSnapshot f = fluid_snapshot(s.fluid);
    const FieldSnapshot d = solid_snapshot(s.solid);
    put(root / "snapshots" / (stem + "_fluid.txt"), snapshot_text(f));
    put(root / "snapshots" / (stem + "_solid.txt"), snapshot_text(d));
    if (opts.vtk) {
      const fs::path pf = root / "snapshots" / (stem + "_fluid.vtk");
      const fs::path ps = root / "snapshots" / (stem + "_solid.vtk");
      save_vtk(pf.string(), f);
      save_vtk(ps.string(), d);
      written.push_back(pf.string());
      written.push_back(ps.string());
    }
  }
  return written;
}

}  // namespace fsi
