#include "cmclab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "cmclab/errors.hpp"
#include "cmclab/format.hpp"

namespace cmclab {

namespace {

using Inputs = std::vector<std::string>;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, key + ": " + what);
}

std::string single(const std::string& key, const Inputs& in) {
  if (in.size() != 1) fail(key, "expected one value");
  return in[0];
}

// Free text: the INI reader splits on spaces, so join the pieces back.
std::string text(const std::string& key, const Inputs& in) {
  if (in.empty()) fail(key, "expected a value");
  std::string out;
  for (const auto& piece : in) out += (out.empty() ? "" : " ") + piece;
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) fail(key, "'" + s + "' is not a number");
  return v;
}

double number(const std::string& key, const Inputs& in) { return to_double(key, single(key, in)); }

long long integer(const std::string& key, const Inputs& in) {
  const std::string s = single(key, in);
  long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) fail(key, "'" + s + "' is not an integer");
  return v;
}

std::vector<double> numbers(const std::string& key, const Inputs& in) {
  std::vector<double> out;
  for (const auto& item : in) {
    // Accept both "1 2 3" and "1, 2, 3".
    std::string s = item;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream words(s);
    std::string w;
    while (words >> w) out.push_back(to_double(key, w));
  }
  return out;
}

Vec vec3(const std::string& key, const Inputs& in) {
  const auto v = numbers(key, in);
  if (v.size() != 3) fail(key, "expected 3 numbers");
  return {v[0], v[1], v[2]};
}

bool boolean(const std::string& key, const Inputs& in) {
  std::string s = single(key, in);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(key, "'" + s + "' is not a boolean");
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) fail(key, "must be positive");
  return v;
}

const std::vector<std::string>& numeric_shape_keys() {
  static const std::vector<std::string> keys{"radius", "t", "amplitude", "width", "gap_factor", "degree", "count"};
  return keys;
}

std::string kind_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::Ball: return "ball";
    case ShapeKind::Ellipsoid: return "ellipsoid";
    case ShapeKind::Perturbed: return "perturbed";
    case ShapeKind::Neck: return "neck";
    case ShapeKind::External: return "external";
  }
  return "?";
}

}  // namespace

double current_value(const ShapeSpec& s) {
  if (s.vary == "radius") return s.radius;
  if (s.vary == "t") return s.t;
  if (s.vary == "amplitude") return s.amplitude;
  if (s.vary == "width") return s.width;
  if (s.vary == "gap_factor") return s.gap_factor;
  if (s.vary == "degree") return s.degree;
  if (s.vary == "count") return s.count;
  return 0.0;
}

ShapeSpec with_value(ShapeSpec s, double v) {
  auto as_int = [&](const char* key) {
    if (v != std::round(v)) fail(std::string("shape.") + key, "swept value must be an integer");
    return static_cast<int>(v);
  };
  if (s.vary == "radius") s.radius = v;
  else if (s.vary == "t") s.t = v;
  else if (s.vary == "amplitude") s.amplitude = v;
  else if (s.vary == "width") s.width = v;
  else if (s.vary == "gap_factor") s.gap_factor = v;
  else if (s.vary == "degree") s.degree = as_int("degree");
  else if (s.vary == "count") s.count = as_int("count");
  return s;
}

std::vector<double> ExperimentConfig::members() const {
  if (!shape.values.empty()) return shape.values;
  return {current_value(shape)};
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  auto line = [&](const std::string& key, const std::string& value) { os << key << '=' << value << '\n'; };
  auto vec = [](const Vec& v) { return num(v[0]) + ' ' + num(v[1]) + ' ' + num(v[2]); };
  auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string("default"); };
  line("experiment.name", name);
  line("experiment.seed", std::to_string(seed));
  line("experiment.fit_clamped", fit_clamped ? "true" : "false");
  line("shape.kind", kind_name(shape.kind));
  line("shape.radius", num(shape.radius));
  line("shape.center", vec(shape.center));
  line("shape.axes", vec(shape.axes));
  line("shape.t", num(shape.t));
  line("shape.degree", std::to_string(shape.degree));
  line("shape.amplitude", num(shape.amplitude));
  line("shape.modes_seed", std::to_string(shape.modes_seed));
  line("shape.count", std::to_string(shape.count));
  line("shape.width", num(shape.width));
  line("shape.gap_factor", num(shape.gap_factor));
  line("shape.profile", shape.profile == NeckProfile::CatenoidLike ? "catenoid" : "smooth_min");
  line("shape.path", shape.path.string());
  line("shape.vary", shape.vary);
  std::string values;
  for (double v : shape.values) values += (values.empty() ? "" : " ") + num(v);
  line("shape.values", values);
  line("grid.dim", std::to_string(grid.dim));
  line("grid.h", num(grid.h));
  line("grid.margin", num(grid.margin_cells));
  line("pipeline.torsion", pipeline.torsion ? "true" : "false");
  line("pipeline.identities", pipeline.identities ? "true" : "false");
  line("pipeline.decompose", pipeline.decompose ? "true" : "false");
  line("pipeline.capillarity", pipeline.capillarity ? "true" : "false");
  line("pipeline.montiel_ros", pipeline.montiel_ros ? "true" : "false");
  const auto& d = decomposition;
  line("decomposition.alpha", opt(d.alpha));
  line("decomposition.beta", opt(d.beta));
  line("decomposition.c0", d.c0_mode == C0Mode::Empirical ? "empirical" : num(d.c0_value));
  line("decomposition.eps_min_factor", num(d.eps_min_factor));
  line("decomposition.eps_max", opt(d.eps_max));
  line("decomposition.eps", opt(d.eps_override));
  line("decomposition.rho", opt(d.rho_override));
  line("decomposition.lambda", num(d.lambda_coeff));
  line("decomposition.c1", num(d.c1));
  line("decomposition.c4", num(d.c4));
  line("decomposition.keep_psi", d.keep_psi_samples ? "true" : "false");
  line("capillarity.g", potential);
  return os.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base) {
  ExperimentConfig cfg;
  auto& s = cfg.shape;
  auto& d = cfg.decomposition;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
  };
  using Handler = std::function<void(const std::string&, const Inputs&)>;
  const std::map<std::string, Handler> handlers{
      {"experiment.name", [&](auto& k, auto& v) { cfg.name = text(k, v); }},
      {"experiment.seed", [&](auto& k, auto& v) {
         const auto x = integer(k, v);
         if (x < 0) fail(k, "must be non-negative");
         cfg.seed = static_cast<std::uint64_t>(x);
       }},
      {"experiment.out", [&](auto& k, auto& v) { cfg.out = resolve(text(k, v)); }},
      {"experiment.jobs", [&](auto& k, auto& v) {
         cfg.jobs = static_cast<int>(integer(k, v));
         if (cfg.jobs < 1) fail(k, "must be at least 1");
       }},
      {"experiment.fit_clamped", [&](auto& k, auto& v) { cfg.fit_clamped = boolean(k, v); }},
      {"shape.kind", [&](auto& k, auto& v) {
         const std::string x = single(k, v);
         if (x == "ball") s.kind = ShapeKind::Ball;
         else if (x == "ellipsoid") s.kind = ShapeKind::Ellipsoid;
         else if (x == "perturbed") s.kind = ShapeKind::Perturbed;
         else if (x == "neck") s.kind = ShapeKind::Neck;
         else if (x == "external") s.kind = ShapeKind::External;
         else fail(k, "unknown shape '" + x + "'");
       }},
      {"shape.radius", [&](auto& k, auto& v) { s.radius = positive(k, number(k, v)); }},
      {"shape.center", [&](auto& k, auto& v) { s.center = vec3(k, v); }},
      {"shape.axes", [&](auto& k, auto& v) { s.axes = vec3(k, v); }},
      {"shape.t", [&](auto& k, auto& v) { s.t = number(k, v); }},
      {"shape.degree", [&](auto& k, auto& v) { s.degree = static_cast<int>(integer(k, v)); }},
      {"shape.amplitude", [&](auto& k, auto& v) { s.amplitude = number(k, v); }},
      {"shape.modes_seed", [&](auto& k, auto& v) { s.modes_seed = static_cast<std::uint64_t>(integer(k, v)); }},
      {"shape.count", [&](auto& k, auto& v) { s.count = static_cast<int>(integer(k, v)); }},
      {"shape.width", [&](auto& k, auto& v) { s.width = positive(k, number(k, v)); }},
      {"shape.gap_factor", [&](auto& k, auto& v) { s.gap_factor = number(k, v); }},
      {"shape.profile", [&](auto& k, auto& v) {
         const std::string x = single(k, v);
         if (x == "catenoid") s.profile = NeckProfile::CatenoidLike;
         else if (x == "smooth_min") s.profile = NeckProfile::SmoothMin;
         else fail(k, "unknown profile '" + x + "'");
       }},
      {"shape.path", [&](auto& k, auto& v) { s.path = resolve(text(k, v)); }},
      {"shape.vary", [&](auto& k, auto& v) {
         s.vary = single(k, v);
         const auto& keys = numeric_shape_keys();
         if (std::find(keys.begin(), keys.end(), s.vary) == keys.end()) fail(k, "cannot sweep '" + s.vary + "'");
       }},
      {"shape.values", [&](auto& k, auto& v) { s.values = numbers(k, v); }},
      {"grid.dim", [&](auto& k, auto& v) {
         cfg.grid.dim = static_cast<int>(integer(k, v));
         if (cfg.grid.dim != 2 && cfg.grid.dim != 3) fail(k, "must be 2 or 3");
       }},
      {"grid.h", [&](auto& k, auto& v) { cfg.grid.h = positive(k, number(k, v)); }},
      {"grid.margin", [&](auto& k, auto& v) {
         cfg.grid.margin_cells = number(k, v);
         if (cfg.grid.margin_cells < 4) fail(k, "must be at least 4 cells");
       }},
      {"pipeline.torsion", [&](auto& k, auto& v) { cfg.pipeline.torsion = boolean(k, v); }},
      {"pipeline.identities", [&](auto& k, auto& v) { cfg.pipeline.identities = boolean(k, v); }},
      {"pipeline.decompose", [&](auto& k, auto& v) { cfg.pipeline.decompose = boolean(k, v); }},
      {"pipeline.capillarity", [&](auto& k, auto& v) { cfg.pipeline.capillarity = boolean(k, v); }},
      {"pipeline.montiel_ros", [&](auto& k, auto& v) { cfg.pipeline.montiel_ros = boolean(k, v); }},
      {"decomposition.alpha", [&](auto& k, auto& v) { d.alpha = number(k, v); }},
      {"decomposition.beta", [&](auto& k, auto& v) { d.beta = number(k, v); }},
      {"decomposition.c0", [&](auto& k, auto& v) {
         if (single(k, v) == "empirical") {
           d.c0_mode = C0Mode::Empirical;
         } else {
           d.c0_mode = C0Mode::Fixed;
           d.c0_value = positive(k, number(k, v));
         }
       }},
      {"decomposition.eps_min_factor", [&](auto& k, auto& v) { d.eps_min_factor = positive(k, number(k, v)); }},
      {"decomposition.eps_max", [&](auto& k, auto& v) { d.eps_max = positive(k, number(k, v)); }},
      {"decomposition.eps", [&](auto& k, auto& v) { d.eps_override = positive(k, number(k, v)); }},
      {"decomposition.rho", [&](auto& k, auto& v) { d.rho_override = positive(k, number(k, v)); }},
      {"decomposition.lambda", [&](auto& k, auto& v) { d.lambda_coeff = positive(k, number(k, v)); }},
      {"decomposition.c1", [&](auto& k, auto& v) { d.c1 = positive(k, number(k, v)); }},
      {"decomposition.c4", [&](auto& k, auto& v) { d.c4 = positive(k, number(k, v)); }},
      {"decomposition.keep_psi", [&](auto& k, auto& v) { d.keep_psi_samples = boolean(k, v); }},
      {"capillarity.g", [&](auto& k, auto& v) { cfg.potential = text(k, v); }},
  };

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (item.parents.size() != 1) fail(item.fullname(), "keys must sit inside one [section]");
    const auto it = handlers.find(item.fullname());
    if (it == handlers.end()) fail(item.fullname(), "unknown key");
    it->second(item.fullname(), item.inputs);
  }

  if (!s.vary.empty() && s.values.empty()) fail("shape.values", "vary is set but the value list is empty");
  if (s.vary.empty() && !s.values.empty()) fail("shape.vary", "values given without a key to sweep");
  for (double v : s.values) (void)with_value(s, v);
  if (d.alpha && d.beta && !(0 < *d.beta && *d.beta < *d.alpha && *d.alpha < 0.5))
    fail("decomposition", "need 0 < beta < alpha < 1/2");
  if (s.kind == ShapeKind::External) {
    if (s.path.empty()) fail("shape.path", "external shapes need a path");
    if (!std::filesystem::exists(s.path)) fail("shape.path", "'" + s.path.string() + "' does not exist");
  }
  if (cfg.potential.ends_with(".csv")) {
    cfg.potential = resolve(cfg.potential).string();
    if (!std::filesystem::exists(cfg.potential)) fail("capillarity.g", "'" + cfg.potential + "' does not exist");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

ImplicitDomain build_member(const ExperimentConfig& cfg, double value) {
  const ShapeSpec s = with_value(cfg.shape, value);
  if (s.kind == ShapeKind::External) return load_external(s.path);
  const int dim = cfg.grid.dim;
  const double h = cfg.grid.h;
  Vec lo{}, hi{};
  auto box = [&](const Vec& c, const Vec& half) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = c[a] - half[a];
      hi[a] = c[a] + half[a];
    }
  };
  NeckCompoundSpec neck;
  switch (s.kind) {
    case ShapeKind::Ball: box(s.center, {s.radius, s.radius, s.radius}); break;
    case ShapeKind::Ellipsoid: {
      Vec axes = s.axes;
      axes[dim - 1] += s.t;
      box(s.center, axes);
      break;
    }
    case ShapeKind::Perturbed: {
      // Zonal harmonics are bounded by 1; three random modes by 3.
      const double r = s.radius * (1 + (s.modes_seed == 0 ? 1.0 : 3.0) * std::abs(s.amplitude));
      box(s.center, {r, r, r});
      break;
    }
    case ShapeKind::Neck: {
      neck = neck_chain(s.count, s.radius, s.width, s.gap_factor, s.profile);
      for (auto& c : neck.centers) c += s.center;
      lo = hi = neck.centers.front();
      for (const auto& c : neck.centers)
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], c[a] - s.radius);
          hi[a] = std::max(hi[a], c[a] + s.radius);
        }
      break;
    }
    case ShapeKind::External: break;
  }
  if (dim == 2) lo[2] = hi[2] = 0.0;
  const Grid g = grid_around(dim, lo, hi, h, cfg.grid.margin_cells * h);
  switch (s.kind) {
    case ShapeKind::Ball: return make_ball(s.center, s.radius, g);
    case ShapeKind::Ellipsoid: {
      Vec axes = s.axes;
      axes[dim - 1] += s.t;
      return make_ellipsoid(axes, g, s.center);
    }
    case ShapeKind::Perturbed:
      return make_perturbed_sphere(s.radius, {s.degree, s.amplitude, s.modes_seed}, g, s.center);
    case ShapeKind::Neck: return make_neck_compound(neck, g);
    case ShapeKind::External: break;
  }
  throw Error(ErrorCode::InvalidArgument, "unreachable shape kind");
}

}  // namespace cmclab
