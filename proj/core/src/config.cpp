#include "fsi/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace fsi {

namespace {

using Setter = std::function<std::optional<std::string>(RunConfig&, std::string_view)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  const char* name;
  const char* doc;
  Setter set;
  Getter get;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
std::optional<T> number(std::string_view s) {
  T v{};
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) return std::nullopt;
  return v;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

template <class F>
Key real_key(const char* name, const char* doc, F field) {
  return {name, doc,
          [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
            const auto x = number<double>(v);
            if (!x) return fmt::format("expected a number, got '{}'", v);
            field(c) = *x;
            return std::nullopt;
          },
          [field](const RunConfig& c) { return fmt_double(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
Key int_key(const char* name, const char* doc, F field) {
  return {name, doc,
          [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
            const auto x = number<int>(v);
            if (!x) return fmt::format("expected an integer, got '{}'", v);
            field(c) = *x;
            return std::nullopt;
          },
          [field](const RunConfig& c) { return fmt::format("{}", field(const_cast<RunConfig&>(c))); }};
}

template <class F>
Key vec_key(const char* name, const char* doc, F field) {
  return {name, doc,
          [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
            const auto w = words(v);
            std::optional<double> x, y;
            if (w.size() == 2) {
              x = number<double>(w[0]);
              y = number<double>(w[1]);
            }
            if (!x || !y) return fmt::format("expected two numbers, got '{}'", v);
            field(c) = Vec2(*x, *y);
            return std::nullopt;
          },
          [field](const RunConfig& c) {
            const Vec2 p = field(const_cast<RunConfig&>(c));
            return fmt_double(p.x()) + " " + fmt_double(p.y());
          }};
}

template <class F>
Key index_key(const char* name, const char* doc, F field) {
  return {name, doc,
          [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
            const auto w = words(v);
            std::optional<int> x, y;
            if (w.size() == 2) {
              x = number<int>(w[0]);
              y = number<int>(w[1]);
            }
            if (!x || !y) return fmt::format("expected two integers, got '{}'", v);
            field(c) = Index2{*x, *y};
            return std::nullopt;
          },
          [field](const RunConfig& c) {
            const Index2 r = field(const_cast<RunConfig&>(c));
            return fmt::format("{} {}", r[0], r[1]);
          }};
}

template <class F>
Key bool_key(const char* name, const char* doc, F field) {
  return {name, doc,
          [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
            if (v == "true" || v == "1" || v == "yes") {
              field(c) = true;
            } else if (v == "false" || v == "0" || v == "no") {
              field(c) = false;
            } else {
              return fmt::format("expected true or false, got '{}'", v);
            }
            return std::nullopt;
          },
          [field](const RunConfig& c) { return std::string(field(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

#define FIELD(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      {"preset", "quiescent | falling-disk | wall-impact",
       [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
         try {
           c.preset = preset_from_name(std::string(v));
         } catch (const InvalidArgumentError& e) {
           return std::string(e.what());
         }
         return std::nullopt;
       },
       [](const RunConfig& c) { return preset_name(c.preset); }},
      {"output_dir", "directory for ledger, snapshots and reports",
       [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
         if (v.empty()) return std::string("output directory must not be empty");
         c.output_dir = std::string(v);
         return std::nullopt;
       },
       [](const RunConfig& c) { return c.output_dir; }},
      int_key("snapshot_every", "windows between snapshots, 0 for first and last only", FIELD(snapshot_every)),
      bool_key("write_vtk", "also write legacy VTK snapshots", FIELD(write_vtk)),
      {"collar_widths", "pressure collar widths in fluid cells, space separated",
       [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
         std::vector<double> out;
         for (std::string_view w : words(v)) {
           const auto x = number<double>(w);
           if (!x) return fmt::format("expected numbers, got '{}'", w);
           out.push_back(*x);
         }
         c.collar_widths = out;
         return std::nullopt;
       },
       [](const RunConfig& c) {
         std::string s;
         for (double w : c.collar_widths) s += (s.empty() ? "" : " ") + fmt_double(w);
         return s;
       }},
      {"dimension", "spatial dimension; only 2 is implemented",
       [](RunConfig&, std::string_view v) -> std::optional<std::string> {
         if (v != "2") return fmt::format("only dimension 2 is supported, got '{}'", v);
         return std::nullopt;
       },
       [](const RunConfig&) { return std::string("2"); }},
      real_key("T", "time horizon", FIELD(params.T)),
      int_key("N", "number of coupling windows, h = T/N", FIELD(params.N)),
      real_key("eps", "regularization, contact and artificial pressure scale", FIELD(params.eps)),
      real_key("varsigma", "density damping", FIELD(params.varsigma)),
      {"seed", "seed of the initial density perturbation",
       [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
         const auto x = number<std::uint64_t>(v);
         if (!x) return fmt::format("expected a non-negative integer, got '{}'", v);
         c.params.seed = *x;
         return std::nullopt;
       },
       [](const RunConfig& c) { return fmt::format("{}", c.params.seed); }},
      vec_key("container_origin", "lower left corner of the container", FIELD(params.container.origin)),
      vec_key("container_extent", "container side lengths", FIELD(params.container.extent)),
      index_key("fluid_resolution", "fluid cells per axis", FIELD(params.container.resolution)),
      index_key("solid_resolution", "solid nodes per axis", FIELD(params.solid_resolution)),
      real_key("solid_side", "reference side length of the solid square", FIELD(params.solid_side)),
      real_key("fluid_mass", "initial fluid mass", FIELD(params.fluid_mass)),
      real_key("solid_speed", "initial solid speed of the moving presets", FIELD(params.solid_speed)),
      real_key("rho_noise", "relative amplitude of the seeded density perturbation", FIELD(params.rho_noise)),
      real_key("gamma", "adiabatic exponent", FIELD(params.fluid.gamma)),
      real_key("beta", "artificial pressure exponent", FIELD(params.fluid.beta)),
      real_key("mu", "shear viscosity", FIELD(params.fluid.mu)),
      real_key("zeta", "bulk viscosity", FIELD(params.fluid.zeta)),
      real_key("cfl", "fluid CFL number", FIELD(params.fluid.cfl)),
      real_key("floor_rel", "velocity recovery floor relative to the mean density", FIELD(params.fluid.floor_rel)),
      bool_key("eps_viscosity_in_solid", "eps-scaled viscosity on the solid mask", FIELD(params.fluid.eps_viscosity_in_solid)),
      real_key("lambda_e", "first elastic modulus", FIELD(params.material.lambda_e)),
      real_key("mu_e", "second elastic modulus", FIELD(params.material.mu_e)),
      real_key("a", "determinant barrier exponent", FIELD(params.material.a)),
      real_key("q", "integrability exponent", FIELD(params.material.q)),
      int_key("k0", "order of the regularizing norm", FIELD(params.material.k0)),
      real_key("a0", "regularization weight exponent", FIELD(params.material.a0)),
      int_key("M", "minimizing movement substeps per window", FIELD(params.ssp.M)),
      real_key("rel_tol", "optimizer gradient tolerance, relative", FIELD(params.ssp.rel_tol)),
      int_key("max_iterations", "optimizer iteration cap", FIELD(params.ssp.max_iterations)),
      real_key("armijo_c1", "line search sufficient decrease constant", FIELD(params.ssp.armijo_c1)),
      real_key("backtrack", "line search backtracking factor", FIELD(params.ssp.backtrack)),
      {"method", "newton | gradient-descent",
       [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
         if (v == "newton") {
           c.params.ssp.method = OptimizerMethod::Newton;
         } else if (v == "gradient-descent") {
           c.params.ssp.method = OptimizerMethod::GradientDescent;
         } else {
           return fmt::format("unknown method '{}' (newton, gradient-descent)", v);
         }
         return std::nullopt;
       },
       [](const RunConfig& c) {
         return std::string(c.params.ssp.method == OptimizerMethod::Newton ? "newton" : "gradient-descent");
       }},
  };
  return k;
}

#undef FIELD

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char ch : k)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) return false;
  return true;
}

void sync(SchemeParams& p) {
  p.fluid.eps = p.eps;
  p.fluid.varsigma = p.varsigma;
  if (p.N >= 1) p.ssp.h = p.h();
}

}  // namespace

std::string format_issue(const ConfigIssue& i) {
  if (i.line == 0) return "default value: " + i.message;
  return fmt::format("line {}, column {}: {}", i.line, i.column, i.message);
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : InvalidArgumentError([&] {
        std::string s = "invalid configuration:";
        for (const ConfigIssue& i : issues) s += "\n  " + format_issue(i);
        return s;
      }()),
      issues_(std::move(issues)) {}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : keys()) out.emplace_back(k.name);
  return out;
}

ParsedConfig parse_config(std::string_view text) {
  struct Where {
    int line, column;
  };
  ParsedConfig out;
  std::vector<ConfigIssue> errors;
  std::map<std::string, Where, std::less<>> seen;
  std::map<std::string, bool, std::less<>> bad_value;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) {
      if (nl == text.size()) break;
      continue;
    }
    const int first = static_cast<int>(line.find_first_not_of(" \t")) + 1;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back({line_no, first, "expected 'key = value'"});
      continue;
    }
    const std::string_view key = trim(line.substr(0, eq));
    std::string_view rest = line.substr(eq + 1);
    const std::size_t vstart = rest.find_first_not_of(" \t");
    const int vcol = static_cast<int>(eq + 2 + (vstart == std::string_view::npos ? 0 : vstart));
    const std::string_view value = trim(rest);
    if (!valid_key(key)) {
      errors.push_back({line_no, first, fmt::format("malformed key '{}'", key)});
      continue;
    }
    const Key* k = nullptr;
    for (const Key& c : keys())
      if (key == c.name) k = &c;
    if (k == nullptr) {
      errors.push_back({line_no, first, fmt::format("unknown key '{}'", key)});
      continue;
    }
    if (auto it = seen.find(key); it != seen.end()) {
      errors.push_back({line_no, first, fmt::format("duplicate key '{}' (first set on line {})", key, it->second.line)});
      continue;
    }
    seen.emplace(std::string(key), Where{line_no, vcol});
    if (value.empty() && key != "collar_widths") {
      errors.push_back({line_no, vcol, fmt::format("missing value for '{}'", key)});
      bad_value[std::string(key)] = true;
      continue;
    }
    if (auto err = k->set(out.config, value)) {
      errors.push_back({line_no, vcol, fmt::format("{}: {}", key, *err)});
      bad_value[std::string(key)] = true;
    }
    if (nl == text.size()) break;
  }

  sync(out.config.params);
  auto report = [&](const std::string& key, const std::string& msg, bool warning) {
    if (bad_value.count(key)) return;
    ConfigIssue i{0, 0, key + ": " + msg};
    if (auto it = seen.find(key); it != seen.end()) {
      i.line = it->second.line;
      i.column = it->second.column;
    }
    (warning ? out.warnings : errors).push_back(i);
  };
  for (const ParamIssue& i : out.config.params.issues()) report(i.key, i.message, i.warning);
  if (out.config.snapshot_every < 0) report("snapshot_every", "must be >= 0", false);
  for (double w : out.config.collar_widths)
    if (!(w > 0.0)) {
      report("collar_widths", "widths must be > 0", false);
      break;
    }

  if (!errors.empty()) {
    std::stable_sort(errors.begin(), errors.end(),
                     [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
    throw ConfigError(std::move(errors));
  }
  return out;
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string write_config(const RunConfig& config) {
  std::string out;
  for (const Key& k : keys()) out += fmt::format("# {}\n{} = {}\n", k.doc, k.name, k.get(config));
  return out;
}

}  // namespace fsi
