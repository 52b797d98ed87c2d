#include "cmclab/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>

#include "cmclab/errors.hpp"
#include "cmclab/format.hpp"

namespace cmclab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Plan {
  bool torsion = false, identities = false, decompose = false, capillarity = false;
};

Plan plan_for(const ExperimentConfig& cfg, Stage stage) {
  const auto& p = cfg.pipeline;
  Plan out;
  switch (stage) {
    case Stage::Analyze:
      out.identities = p.identities;
      out.torsion = p.torsion || p.identities;
      break;
    case Stage::Torsion: out.torsion = true; break;
    case Stage::Decompose: out.torsion = out.decompose = true; break;
    case Stage::Sweep:
      out.identities = p.identities;
      out.decompose = p.decompose;
      out.capillarity = p.capillarity;
      out.torsion = p.torsion || p.identities || p.decompose;
      break;
    case Stage::Capillarity: out.capillarity = true; break;
  }
  return out;
}

std::string member_file(const std::string& stem, std::size_t index, const std::string& ext = ".csv") {
  std::ostringstream os;
  os << stem << '_' << std::setw(3) << std::setfill('0') << index << ext;
  return os.str();
}

double alpha_of(const ExperimentConfig& cfg) {
  const int n = cfg.grid.dim - 1;
  return cfg.decomposition.alpha.value_or(1.0 / (2.0 * (n + 2)));
}

}  // namespace

std::vector<MetricExponent> theory_exponents(int n, double alpha) {
  const double n1 = n + 1;
  return {
      {"sym_diff_rel", alpha},
      {"perim_quant", alpha},
      {"onesided", alpha},
      {"hausdorff", alpha / (4 * n * n * n1)},
      {"tangency", alpha / (4 * n1)},
      {"psi_sup", alpha / (8 * n * n1)},
  };
}

ExponentFit fit_exponent(const std::string& metric, double theory, const std::vector<double>& delta,
                         const std::vector<double>& value) {
  std::vector<double> x, y, ratio;
  for (std::size_t i = 0; i < delta.size() && i < value.size(); ++i) {
    if (!(delta[i] > 0.0) || !(value[i] > 0.0)) continue;
    x.push_back(std::log(delta[i]));
    y.push_back(std::log(value[i]));
    ratio.push_back(value[i] / std::pow(delta[i], theory));
  }
  if (x.size() < 3)
    throw Error(ErrorCode::InsufficientPoints,
                metric + ": " + std::to_string(x.size()) + " usable points, need at least 3");
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw Error(ErrorCode::InsufficientPoints, metric + ": all delta values coincide");
  ExponentFit f;
  f.metric = metric;
  f.theory = theory;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  f.max_ratio = *hi;
  // Growth of the ratio towards small delta; a bounded constant keeps this near 1.
  const std::size_t smallest = static_cast<std::size_t>(std::min_element(x.begin(), x.end()) - x.begin());
  f.ratio_spread = ratio[smallest] / *lo;
  if (f.ratio_spread >= 10.0) f.flag = "ratio_unbounded";
  else if (f.slope >= theory) f.flag = "consistent";
  else f.flag = "below_exponent";
  return f;
}

double metric_value(const MemberResult& r, const std::string& metric) {
  if (metric == "delta") return r.rep ? r.rep->delta : kNaN;
  if (metric == "Q") return r.rep ? r.rep->Q : kNaN;
  if (metric == "eta") return r.eta.value_or(kNaN);
  if (!r.decomposition) return kNaN;
  const auto& m = r.decomposition->metrics;
  if (metric == "J") return static_cast<double>(r.decomposition->balls.size());
  if (metric == "sym_diff_rel") return m.sym_diff_rel;
  if (metric == "perim_quant") return m.perim_quant;
  if (metric == "onesided") return m.onesided;
  if (metric == "hausdorff") return m.hausdorff;
  if (metric == "tangency") return m.tangency;
  if (metric == "psi_sup") return m.psi_sup;
  if (metric == "psi_grad") return m.psi_grad_sup;
  if (metric == "uncovered") return m.uncovered_area;
  return kNaN;
}

MemberResult run_member(const ExperimentConfig& cfg, std::size_t index, double value, const RunOptions& opt) {
  const Plan plan = plan_for(cfg, opt.stage);
  MemberResult r;
  r.index = index;
  r.param = value;
  r.h = cfg.grid.h;
  const bool dumping = !opt.dump_dir.empty();
  auto wants = [&](const std::string& name) {
    return dumping && std::find(opt.dump_fields.begin(), opt.dump_fields.end(), name) != opt.dump_fields.end();
  };
  try {
    const ImplicitDomain dom = build_member(cfg, value);
    r.h = dom.grid().h();
    if (wants("phi")) write_field_csv(opt.dump_dir / member_file("field_phi", index), dom.phi);
    const SurfaceSampleSet surf = extract_surface(dom);
    if (dumping && opt.dump_surface) write_surface_csv(opt.dump_dir / member_file("surface", index), surf);
    DeficitReport rep = deficits(dom, surf, cfg.seed);
    try {
      r.eta = eta_deficit(surf, rep.volume).eta;
      rep.eta = *r.eta;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonpositiveMeanCurvature) throw;
      rep.eta = kNaN;
    }
    r.rep = rep;

    if (plan.capillarity) r.capillarity = deficit_bound_check(dom, surf, rep, Potential::parse(cfg.potential));

    if (plan.torsion) {
      const TorsionSolution sol = solve_torsion(dom, surf);
      r.torsion = sol.stats;
      r.lipschitz = lipschitz_check(dom, sol);
      r.talenti = talenti_bound(rep.volume, surf.n());
      if (wants("f")) write_field_csv(opt.dump_dir / member_file("field_f", index), sol.f);
      if (plan.identities) {
        IdentityReport ids = identity_suite({dom, surf, sol, rep});
        if (!cfg.pipeline.montiel_ros)
          std::erase_if(ids.entries, [](const IdentityEntry& e) { return e.name.starts_with("montiel_ros"); });
        r.identities = std::move(ids);
      }
      if (plan.decompose) {
        DecompositionConfig dcfg = cfg.decomposition;
        dcfg.seed = cfg.seed;
        const Decomposition dc = decompose(dom, surf, sol, rep, dcfg);
        if (wants("f_eps")) write_field_csv(opt.dump_dir / member_file("field_f_eps", index), dc.threshold.f_eps);
        DecompositionSummary s;
        s.balls = dc.filtered.system.balls;
        s.balls_original = dc.balls_original_units;
        s.metrics = dc.metrics;
        s.eps = dc.threshold.eps;
        s.rho = dc.threshold.rho;
        s.C0 = dc.threshold.C0;
        s.scale = dc.normalized.scale;
        s.clamped = dc.threshold.clamped;
        s.eta_surrogate = dc.threshold.eta_surrogate;
        s.components = dc.fits.size();
        s.discarded = dc.filtered.discarded;
        s.discarded_volume = dc.filtered.discarded_volume;
        r.decomposition = std::move(s);
      }
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

SweepResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto values = cfg.members();
  SweepResult out;
  out.rows.resize(values.size());
  if (cfg.jobs <= 1 || values.size() <= 1) {
    for (std::size_t i = 0; i < values.size(); ++i) out.rows[i] = run_member(cfg, i, values[i], opt);
  } else {
    // Bounded batches; each slot is filled by index so the order never depends on timing.
    for (std::size_t start = 0; start < values.size(); start += cfg.jobs) {
      std::vector<std::future<MemberResult>> batch;
      const std::size_t stop = std::min(values.size(), start + static_cast<std::size_t>(cfg.jobs));
      for (std::size_t i = start; i < stop; ++i)
        batch.push_back(std::async(std::launch::async, [&, i] { return run_member(cfg, i, values[i], opt); }));
      for (std::size_t i = start; i < stop; ++i) out.rows[i] = batch[i - start].get();
    }
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const MemberResult& a, const MemberResult& b) { return a.param < b.param; });

  const bool any_decomposition =
      std::any_of(out.rows.begin(), out.rows.end(), [](const MemberResult& r) { return r.decomposition.has_value(); });
  if (!any_decomposition) return out;
  for (const auto& [metric, exponent] : theory_exponents(cfg.grid.dim - 1, alpha_of(cfg))) {
    std::vector<double> d, v;
    for (const auto& r : out.rows) {
      if (!r.ok() || !r.decomposition || (r.clamped() && !cfg.fit_clamped)) continue;
      d.push_back(r.rep->delta);
      v.push_back(metric_value(r, metric));
    }
    try {
      out.fits.push_back(fit_exponent(metric, exponent, d, v));
    } catch (const Error& e) {
      out.skipped_fits.emplace_back(metric, e.what());
    }
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const ExperimentConfig& cfg, const SweepResult& result) {
  static const char* cols[] = {"delta",     "eta",      "Q",       "J",         "sym_diff_rel", "perim_quant",
                               "onesided",  "hausdorff", "tangency", "psi_sup",  "psi_grad",     "uncovered"};
  out << "param";
  for (const char* c : cols) out << ',' << c;
  out << ",clamped,error,config_hash,h\n";
  const std::string hash = cfg.hash();
  for (const auto& r : result.rows) {
    out << num(r.param);
    for (const char* c : cols) out << ',' << num(metric_value(r, c));
    out << ',' << (r.decomposition ? (r.clamped() ? "1" : "0") : "") << ',' << csv_field(r.error) << ',' << hash << ','
        << num(r.h) << '\n';
  }
}

void write_fits_csv(std::ostream& out, const SweepResult& result) {
  out << "metric,theory_exponent,slope,intercept,r2,max_ratio,ratio_spread,points,flag\n";
  for (const auto& f : result.fits)
    out << f.metric << ',' << num(f.theory) << ',' << num(f.slope) << ',' << num(f.intercept) << ',' << num(f.r2) << ','
        << num(f.max_ratio) << ',' << num(f.ratio_spread) << ',' << f.points << ',' << f.flag << '\n';
  for (const auto& [metric, why] : result.skipped_fits) out << metric << ",,,,,,,0," << csv_field(why) << '\n';
}

void write_svg(std::ostream& out, const std::string& metric, const std::vector<double>& delta,
               const std::vector<double>& value, const std::optional<ExponentFit>& fit) {
  const double W = 480, H = 360, L = 60, R = 20, T = 30, B = 50;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < delta.size() && i < value.size(); ++i)
    if (delta[i] > 0 && value[i] > 0) pts.emplace_back(std::log10(delta[i]), std::log10(value[i]));
  double x0 = -1, x1 = 0, y0 = -1, y1 = 0;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  // Pad to whole decades so a single point still gets a frame.
  x0 = std::floor(x0 - 0.05);
  x1 = std::ceil(x1 + 0.05);
  y0 = std::floor(y0 - 0.05);
  y1 = std::ceil(y1 + 0.05);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(H) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\"" << num(W - L - R) << "\" height=\""
      << num(H - T - B) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double x = x0; x <= x1 + 1e-9; x += 1)
    out << "<text x=\"" << num(px(x)) << "\" y=\"" << num(H - B + 16) << "\" font-size=\"11\" text-anchor=\"middle\">1e"
        << num(x) << "</text>\n";
  for (double y = y0; y <= y1 + 1e-9; y += 1)
    out << "<text x=\"" << num(L - 6) << "\" y=\"" << num(py(y) + 4) << "\" font-size=\"11\" text-anchor=\"end\">1e"
        << num(y) << "</text>\n";
  out << "<text x=\"" << num(W / 2) << "\" y=\"" << num(H - 12) << "\" font-size=\"12\" text-anchor=\"middle\">delta</text>\n";
  out << "<text x=\"" << num(W / 2) << "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">" << metric;
  if (fit) out << " (slope " << num(std::round(fit->slope * 1000) / 1000) << ", theory " << num(std::round(fit->theory * 1e4) / 1e4) << ")";
  out << "</text>\n";
  for (const auto& [x, y] : pts)
    out << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  if (fit) {
    // Natural-log fit drawn in decades: log10 y = (b + m ln 10 log10 x) / ln 10.
    const double ln10 = std::log(10.0);
    auto line_y = [&](double x) { return (fit->intercept + fit->slope * x * ln10) / ln10; };
    out << "<line x1=\"" << num(px(x0)) << "\" y1=\"" << num(py(line_y(x0))) << "\" x2=\"" << num(px(x1)) << "\" y2=\""
        << num(py(line_y(x1))) << "\" stroke=\"firebrick\"/>\n";
  }
  out << "</svg>\n";
}

std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                                 const SweepResult& result, Stage stage) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& name) {
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    written.push_back(path);
    return f;
  };
  const std::string hash = cfg.hash();

  if (stage == Stage::Sweep || stage == Stage::Decompose) {
    auto f = open("sweep.csv");
    write_sweep_csv(f, cfg, result);
  }
  if (stage == Stage::Sweep) {
    auto f = open("fits.csv");
    write_fits_csv(f, result);
    for (const auto& [metric, exponent] : theory_exponents(cfg.grid.dim - 1, alpha_of(cfg))) {
      std::vector<double> d, v;
      for (const auto& r : result.rows)
        if (r.ok() && r.decomposition) {
          d.push_back(r.rep->delta);
          v.push_back(metric_value(r, metric));
        }
      std::optional<ExponentFit> fit;
      for (const auto& x : result.fits)
        if (x.metric == metric) fit = x;
      auto svg = open(metric + ".svg");
      write_svg(svg, metric, d, v, fit);
    }
  }
  if (stage == Stage::Analyze) {
    auto f = open("analyze.csv");
    f << "param,h,volume,perimeter,H0,delta,Q,eta,diam,r_in,r_out,config_hash,error\n";
    for (const auto& r : result.rows) {
      f << num(r.param) << ',' << num(r.h);
      if (r.rep) {
        const auto& p = *r.rep;
        for (double v : {p.volume, p.perimeter, p.H0, p.delta, p.Q, r.eta.value_or(kNaN), p.diam, p.r_in, p.r_out})
          f << ',' << num(v);
      } else {
        f << ",,,,,,,,,";
      }
      f << ',' << hash << ',' << csv_field(r.error) << '\n';
    }
  }
  if (stage == Stage::Torsion) {
    auto f = open("torsion.csv");
    f << "param,h,unknowns,iterations,relative_residual,f_min,grad_sup,lipschitz_ratio,talenti,config_hash,error\n";
    for (const auto& r : result.rows) {
      f << num(r.param) << ',' << num(r.h) << ',';
      if (r.torsion && r.lipschitz) {
        f << r.torsion->unknowns << ',' << r.torsion->iterations << ',' << num(r.torsion->final_relative_residual) << ','
          << num(-r.lipschitz->f_sup) << ',' << num(r.lipschitz->grad_sup) << ',' << num(r.lipschitz->ratio) << ','
          << num(r.talenti);
      } else {
        f << ",,,,,,";
      }
      f << ',' << hash << ',' << csv_field(r.error) << '\n';
    }
  }
  const bool capillarity = stage == Stage::Capillarity || (stage == Stage::Sweep && cfg.pipeline.capillarity);
  if (capillarity) {
    auto f = open("capillarity.csv");
    f << "param,h,g,lambda_volume,lambda_boundary,lambda_residual,residual,residual_normalized,delta,mass,g_c1,"
         "bound_rhs,applicable,cstar,H0,H0_lower,H0_lower_ok,config_hash,error\n";
    for (const auto& r : result.rows) {
      f << num(r.param) << ',' << num(r.h) << ',' << csv_field(cfg.potential);
      if (r.capillarity) {
        const auto& c = *r.capillarity;
        f << ',' << num(c.lambda.volume_form) << ',' << num(c.lambda.boundary_form) << ',' << num(c.lambda.residual_rel)
          << ',' << num(c.stationarity.residual) << ',' << num(c.stationarity.normalized) << ',' << num(c.delta) << ','
          << num(c.mass) << ',' << num(c.g_c1) << ',' << num(c.bound_rhs_shape) << ',' << (c.applicable ? 1 : 0) << ','
          << num(c.fitted_cstar.value_or(kNaN)) << ',' << num(c.H0) << ',' << num(c.H0_lower) << ','
          << (c.H0_lower_ok ? 1 : 0);
      } else {
        f << ",,,,,,,,,,,,,,,";
      }
      f << ',' << hash << ',' << csv_field(r.error) << '\n';
    }
  }

  for (const auto& r : result.rows) {
    if (r.identities && (stage == Stage::Sweep || stage == Stage::Analyze)) {
      auto f = open(member_file("identities", r.index));
      write_identity_csv(f, *r.identities);
    }
    if (!r.decomposition) continue;
    const auto& s = *r.decomposition;
    {
      auto f = open(member_file("balls", r.index));
      f << "j,zx,zy,zz,s\n";
      for (std::size_t j = 0; j < s.balls_original.size(); ++j) {
        const auto& b = s.balls_original[j];
        f << j << ',' << num(b.center[0]) << ',' << num(b.center[1]) << ',' << num(b.center[2]) << ',' << num(b.radius)
          << '\n';
      }
    }
    {
      const auto& m = s.metrics;
      auto f = open(member_file("metrics", r.index));
      f << "metric,value\n";
      const std::pair<const char*, double> rows[] = {
          {"J", static_cast<double>(s.balls.size())},
          {"components", static_cast<double>(s.components)},
          {"discarded", static_cast<double>(s.discarded)},
          {"discarded_volume", s.discarded_volume},
          {"scale", s.scale},
          {"eps", s.eps},
          {"rho", s.rho},
          {"C0", s.C0},
          {"clamped", s.clamped ? 1.0 : 0.0},
          {"eta_surrogate", s.eta_surrogate ? 1.0 : 0.0},
          {"sym_diff_rel", m.sym_diff_rel},
          {"perim_quant", m.perim_quant},
          {"onesided", m.onesided},
          {"hausdorff", m.hausdorff},
          {"tangency", m.tangency},
          {"psi_sup", m.psi_sup},
          {"psi_grad_sup", m.psi_grad_sup},
          {"uncovered_area", m.uncovered_area},
          {"density_kappa", m.density_kappa},
          {"lambda", m.lambda},
          {"sigma_samples", static_cast<double>(m.sigma_samples)},
          {"ray_missed", static_cast<double>(m.ray_missed)},
          {"excluded_caps", static_cast<double>(m.excluded_caps)},
          {"allard_max", m.allard_max},
      };
      for (const auto& [name, v] : rows) f << name << ',' << num(v) << '\n';
      for (std::size_t j = 0; j < m.tangency_gaps.size(); ++j) f << "tangency_gap_" << j << ',' << num(m.tangency_gaps[j]) << '\n';
    }
    if (!s.metrics.psi.empty()) {
      auto f = open(member_file("psi", r.index));
      f << "x,y,z,psi\n";
      for (const auto& p : s.metrics.psi)
        f << num(p.x[0]) << ',' << num(p.x[1]) << ',' << num(p.x[2]) << ',' << num(p.psi) << '\n';
    }
    if (!s.metrics.allard.empty()) {
      auto f = open(member_file("allard", r.index));
      f << "x,y,z,rho,sigma\n";
      for (const auto& a : s.metrics.allard)
        f << num(a.y[0]) << ',' << num(a.y[1]) << ',' << num(a.y[2]) << ',' << num(a.rho) << ',' << num(a.sigma) << '\n';
    }
  }
  return written;
}

}  // namespace cmclab
