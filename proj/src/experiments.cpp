#include "carnot/experiments.hpp"

#include "carnot/io.hpp"
#include "carnot/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace carnot {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct StartPair {
  GroupElement g;
  GroupElement g_tilde;
};

StartPair start_pair(const ExperimentConfig& cfg) {
  if (!cfg.homogeneous) return {cfg.start, cfg.start_tilde};
  const HomogeneousGroupSpec spec(cfg.homogeneous->c);
  const GroupElement g = lift_point(spec, cfg.homogeneous->start);
  return {g, lift_partner(spec, g, cfg.homogeneous->start, cfg.homogeneous->start_tilde)};
}

void require_grid(const ExperimentConfig& cfg) {
  if (cfg.t_grid.empty()) throw ConfigError("config: t_grid must not be empty for this experiment");
}

}  // namespace

json to_json(const MeanEstimate& e) {
  return {{"mean", e.mean}, {"sd", e.sd}, {"count", e.count}, {"upper99", e.upper()}};
}

// ------------------------------------------------------------------ rate

RateCurve make_rate_curve(std::vector<double> taus, const std::vector<double>& t_grid) {
  RateCurve c;
  std::sort(taus.begin(), taus.end());
  c.t_grid = t_grid;
  c.n_replicas = taus.size();
  c.censored = static_cast<std::size_t>(std::count_if(taus.begin(), taus.end(), [](double t) { return std::isinf(t); }));
  for (double t : t_grid) {
    const std::size_t k = count_greater(taus, t);
    c.survival.push_back(static_cast<double>(k) / static_cast<double>(taus.size()));
    c.ci_upper.push_back(clopper_pearson_upper(k, taus.size()));
  }
  return c;
}

void write_rate_csv(std::ostream& out, const RateCurve& c) {
  out << "t,survival,ci_upper,bound\n";
  for (std::size_t i = 0; i < c.t_grid.size(); ++i)
    out << format_double(c.t_grid[i]) << ',' << format_double(c.survival[i]) << ',' << format_double(c.ci_upper[i])
        << ',' << format_double(i < c.bound.size() ? c.bound[i] : kInf) << '\n';
}

json to_json(const RateCurve& c) {
  json pts = json::array();
  for (std::size_t i = 0; i < c.t_grid.size(); ++i)
    pts.push_back({{"t", c.t_grid[i]},
                   {"survival", c.survival[i]},
                   {"ci_upper", c.ci_upper[i]},
                   {"bound", c.bound[i]},
                   {"in_regime", static_cast<bool>(c.in_regime[i])}});
  return {{"bound", c.bound_name},
          {"regime", "t >= " + format_double(c.regime_start)},
          {"regime_start", c.regime_start},
          {"n_replicas", c.n_replicas},
          {"censored", c.censored},
          {"points", pts},
          {"pass", c.pass}};
}

json to_json(const CouplingTrace& t) {
  json lines = json::array();
  for (const auto& l : t.per_line) lines.push_back({{"line", l.line + 1}, {"blocks", l.blocks}, {"tau_line", l.tau_line}});
  return {{"tau0", t.tau0},       {"per_line", lines},       {"tau", finite_or_null(t.tau)},
          {"mode", to_string(t.mode)}, {"seed", t.seed},     {"stream_id", t.stream_id},
          {"censored", t.flags.censored}};
}

json RateReport::summary() const { return to_json(curve); }

BoundSpec rate_bound(const ExperimentConfig& cfg) {
  const StartPair sp = start_pair(cfg);
  const GroupElement defect = fiber_defect(sp.g, sp.g_tilde);
  const CouplingConstants k = constants(cfg.n);
  const double sep = defect.x.norm();
  const double zn = defect.z.norm2();
  switch (cfg.target) {
    case Target::Line: {
      const double v0 = defect.z.line(0).norm();
      return {"line: b_n |v0| / t", v0, [b = k.b_n, v0](double t) { return b * v0 / t; }};
    }
    case Target::Fiber:
      return {"fiber: beta_n |zeta| / t", (cfg.n - 1) * zn, [b = k.beta_n, zn](double t) { return b * zn / t; }};
    default:
      if (sep == 0.0)
        return {"fiber: beta_n |zeta| / t", (cfg.n - 1) * zn, [b = k.beta_n, zn](double t) { return b * zn / t; }};
      return {"global: C1 |dx| / sqrt(t) + C2 |zeta| / t", k.beta_n * sep * sep,
              [k, sep, zn](double t) { return k.c1 * sep / std::sqrt(t) + k.c2 * zn / t; }};
  }
}

RateReport rate_experiment(const ExperimentConfig& cfg, int threads) {
  require_grid(cfg);
  const StartPair sp = start_pair(cfg);
  const CouplingOptions opts = cfg.coupling_options();
  if (cfg.target != Target::Global && (sp.g_tilde.x - sp.g.x).lpNorm<Eigen::Infinity>() != 0.0)
    throw ConfigError("config: target " + std::string(to_string(cfg.target)) + " needs start points on one fiber");
  std::optional<HomogeneousGroupSpec> spec;
  if (cfg.homogeneous) spec.emplace(cfg.homogeneous->c);

  RateReport rep;
  std::vector<double> taus(cfg.replicas);
  rep.traces.resize(cfg.replicas);
  parallel_for(cfg.replicas, threads, [&](std::size_t i) {
    RngStream rng(cfg.seed, stream_id(1, i));
    CouplingTrace tr;
    tr.mode = opts.mode;
    tr.seed = rng.seed();
    tr.stream_id = rng.stream_id();
    if (cfg.target == Target::Line) {
      CoupledPair pair(sp.g, sp.g_tilde);
      const LineOutcome lo = line_coupling(pair, 0, rng, opts);
      if (lo.trace.v0_norm > 0.0) tr.per_line.push_back(lo.trace);
      tr.flags = lo.flags;
      tr.tau = lo.flags.ended() ? kInf : lo.trace.tau_line;
    } else if (cfg.target == Target::Fiber) {
      CoupledPair pair(sp.g, sp.g_tilde);
      const FiberOutcome fo = fiber_coupling(pair, rng, opts);
      tr.per_line = fo.lines;
      tr.flags = fo.flags;
      tr.tau = fo.flags.ended() ? kInf : fo.tau;
    } else if (spec) {
      tr = lifted_coupling(*spec, cfg.homogeneous->start, cfg.homogeneous->start_tilde, rng, opts).coupling.trace;
    } else {
      tr = global_coupling(sp.g, sp.g_tilde, rng, opts).trace;
    }
    taus[i] = tr.tau;
    rep.traces[i] = std::move(tr);
  });

  rep.curve = make_rate_curve(taus, cfg.t_grid);
  const BoundSpec b = rate_bound(cfg);
  rep.curve.bound_name = b.name;
  rep.curve.regime_start = b.regime_start;
  bool ok = true, any = false;
  std::vector<double> sorted = taus;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
    const double t = cfg.t_grid[i];
    const double bound = b.value(t);
    rep.curve.bound.push_back(bound);
    const bool in = t >= b.regime_start;
    rep.curve.in_regime.push_back(in);
    if (!in) continue;
    any = true;
    // A zero bound means the points coincide: only an exact zero passes.
    if (bound > 0.0)
      ok = ok && rep.curve.ci_upper[i] <= bound;
    else
      ok = ok && count_greater(sorted, t) == 0;
  }
  rep.curve.pass = ok && any;
  return rep;
}

// -------------------------------------------------------------------- tv

namespace {

struct Partition {
  std::vector<int> coords;
};

std::vector<double> coordinates(const GroupElement& g) {
  std::vector<double> v(g.x.data(), g.x.data() + g.x.size());
  v.insert(v.end(), g.z.upper().begin(), g.z.upper().end());
  return v;
}

double quantile(std::vector<double> v, double q) {
  const std::size_t k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace

BinnedTv binned_tv(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b, int bins,
                   int permutations, RngStream& rng) {
  if (a.empty() || b.empty()) throw std::invalid_argument("binned_tv: empty sample");
  const std::size_t dim = a.front().size();
  std::vector<std::vector<double>> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());

  std::vector<double> lo(dim), hi(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    std::vector<double> col;
    col.reserve(pooled.size());
    for (const auto& p : pooled) col.push_back(p[d]);
    lo[d] = quantile(col, 0.01);
    hi[d] = quantile(col, 0.99);
  }
  auto bin_of = [&](double v, std::size_t d) {
    if (!(hi[d] > lo[d])) return 0;
    const int k = static_cast<int>(std::floor((v - lo[d]) / (hi[d] - lo[d]) * bins));
    return std::clamp(k, 0, bins - 1);
  };

  std::vector<Partition> parts;
  if (dim <= 4) {
    Partition p;
    for (std::size_t d = 0; d < dim; ++d) p.coords.push_back(static_cast<int>(d));
    parts.push_back(p);
  } else {
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j) parts.push_back({{static_cast<int>(i), static_cast<int>(j)}});
  }

  // Cell label of every pooled sample, per partition.
  auto cell = [&](const std::vector<double>& p, const Partition& part) {
    long long c = 0;
    for (int d : part.coords) c = c * bins + bin_of(p[d], static_cast<std::size_t>(d));
    return c;
  };
  auto tv_of = [&](const std::vector<long long>& labels, const std::vector<std::size_t>& order, std::size_t na) {
    std::unordered_map<long long, std::pair<double, double>> h;
    const double wa = 1.0 / static_cast<double>(na);
    const double wb = 1.0 / static_cast<double>(order.size() - na);
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& e = h[labels[order[k]]];
      if (k < na)
        e.first += wa;
      else
        e.second += wb;
    }
    double s = 0.0;
    for (const auto& [key, e] : h) s += std::abs(e.first - e.second);
    return 0.5 * s;
  };

  BinnedTv best;
  std::vector<std::size_t> identity(pooled.size());
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<std::vector<std::size_t>> shuffles(permutations, identity);
  for (auto& s : shuffles) std::shuffle(s.begin(), s.end(), rng);

  bool first = true;
  for (const auto& part : parts) {
    std::vector<long long> labels(pooled.size());
    for (std::size_t k = 0; k < pooled.size(); ++k) labels[k] = cell(pooled[k], part);
    const double plugin = tv_of(labels, identity, a.size());
    std::vector<double> null_values;
    for (const auto& s : shuffles) null_values.push_back(tv_of(labels, s, a.size()));
    const MeanEstimate null = estimate_mean(null_values);
    // Same-law splits of the pooled sample estimate the plug-in bias; three
    // of their standard deviations keep the corrected value a lower estimate.
    const double floor = null.mean + 3.0 * null.sd;
    const double lower = std::max(0.0, plugin - floor);
    if (first || lower > best.lower) best = {plugin, floor, lower};
    first = false;
  }
  return best;
}

json TvReport::summary() const {
  json pts = json::array();
  for (const auto& p : points)
    pts.push_back({{"t", p.t},
                   {"tv_plugin", p.tv_plugin},
                   {"noise_floor", p.noise_floor},
                   {"tv_lower", p.tv_lower},
                   {"bound", p.bound},
                   {"coupling_survival", p.survival},
                   {"coupling_survival_se", p.survival_se},
                   {"in_regime", p.in_regime},
                   {"pass_bound", p.pass_bound},
                   {"pass_coupling", p.pass_coupling}});
  return {{"points", pts}, {"pass", pass}};
}

TvReport tv_bound_experiment(const ExperimentConfig& cfg, int threads) {
  require_grid(cfg);
  const StartPair sp = start_pair(cfg);
  const GroupElement defect = fiber_defect(sp.g, sp.g_tilde);
  const CouplingConstants k = constants(cfg.n);
  const double sep = defect.x.norm(), zn = defect.z.norm2();
  const CouplingOptions opts = cfg.coupling_options();
  const std::size_t N = cfg.replicas;

  std::vector<double> taus(N);
  parallel_for(N, threads, [&](std::size_t i) {
    RngStream rng(cfg.seed, stream_id(2, i));
    taus[i] = global_coupling(sp.g, sp.g_tilde, rng, opts).tau;
  });
  std::sort(taus.begin(), taus.end());

  TvReport rep;
  rep.pass = true;
  for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
    const double t = cfg.t_grid[ti];
    std::vector<std::vector<double>> a(N), b(N);
    parallel_for(N, threads, [&](std::size_t i) {
      RngStream ra(cfg.seed, stream_id(10 + 2 * ti, i));
      RngStream rb(cfg.seed, stream_id(11 + 2 * ti, i));
      a[i] = coordinates(simulate_endpoint(sp.g, t, std::min(cfg.h, t), ra));
      b[i] = coordinates(simulate_endpoint(sp.g_tilde, t, std::min(cfg.h, t), rb));
    });
    RngStream perm(cfg.seed, stream_id(3, ti));
    const BinnedTv tv = binned_tv(a, b, cfg.tv.bins, cfg.tv.permutations, perm);
    TvPoint p;
    p.t = t;
    p.tv_plugin = tv.plugin;
    p.noise_floor = tv.floor;
    p.tv_lower = tv.lower;
    p.bound = k.c1 * sep / std::sqrt(t) + k.c2 * zn / t;
    p.survival = static_cast<double>(count_greater(taus, t)) / static_cast<double>(N);
    p.survival_se = std::sqrt(p.survival * (1.0 - p.survival) / static_cast<double>(N));
    p.in_regime = t >= k.beta_n * sep * sep;
    p.pass_bound = !p.in_regime || p.tv_lower <= p.bound;
    p.pass_coupling = p.tv_lower <= p.survival + 3.0 * p.survival_se;
    rep.pass = rep.pass && p.pass_bound && p.pass_coupling;
    rep.points.push_back(p);
  }
  return rep;
}

// ----------------------------------------------------------------- areas

json AreaReport::summary() const {
  json cs = json::array();
  for (const auto& c : checks) {
    json entries = json::array();
    for (std::size_t j = 0; j < c.lemma_entries.size(); ++j) {
      json e = to_json(c.lemma_entries[j]);
      e["entry"] = "(1," + std::to_string(j + 2) + ")";
      entries.push_back(e);
    }
    cs.push_back({{"truncation", c.truncation},
                  {"norm_lemma", to_json(c.lemma_norm)},
                  {"norm_rhs", c.rhs_norm},
                  {"norm_regime", "m >= |dx|^2 / 2"},
                  {"norm_in_regime", c.in_regime},
                  {"entry_lemma", entries},
                  {"entry_rhs", c.rhs_entries},
                  {"pass", c.pass}});
  }
  return {{"checks", cs}, {"censored", censored}, {"max_untouched_drift", max_untouched_drift}, {"pass", pass}};
}

AreaReport area_lemma_experiment(const ExperimentConfig& cfg, int threads) {
  const StartPair sp = start_pair(cfg);
  const GroupElement defect0 = fiber_defect(sp.g, sp.g_tilde);
  const double sep = defect0.x.norm(), zn = defect0.z.norm2();
  const int n = cfg.n;
  const std::size_t N = cfg.replicas;
  CouplingOptions opts = cfg.coupling_options();
  opts.mode = Fidelity::Path;

  struct Sample {
    double norm = 0.0;
    std::vector<double> entries;
    double drift = 0.0;
    bool censored = false;
  };
  std::vector<Sample> samples(N);
  parallel_for(N, threads, [&](std::size_t i) {
    RngStream rng(cfg.seed, stream_id(4, i));
    CoupledPair pair(sp.g, sp.g_tilde);
    const ReflectionOutcome r = run_reflection(pair, rng, opts);
    Sample s;
    s.censored = r.flags.ended();
    const SkewMatrix z0 = defect0.z.conjugated(pair.frame());
    const SkewMatrix& zt = pair.defect().z;
    s.norm = zt.norm2();
    for (int j = 1; j < n; ++j) s.entries.push_back(std::abs(zt(0, j) - z0(0, j)));
    for (int a = 1; a < n; ++a)
      for (int b = a + 1; b < n; ++b) s.drift = std::max(s.drift, std::abs(zt(a, b) - z0(a, b)));
    samples[i] = std::move(s);
  });

  AreaReport rep;
  for (const auto& s : samples) {
    rep.censored += s.censored ? 1 : 0;
    rep.max_untouched_drift = std::max(rep.max_untouched_drift, s.drift);
  }
  bool ok = true, any = false;
  for (double m : cfg.areas.truncations) {
    AreaCheck c;
    c.truncation = m;
    std::vector<double> q(N);
    for (std::size_t i = 0; i < N; ++i) q[i] = samples[i].censored ? 1.0 : std::min(samples[i].norm / m, 1.0);
    c.lemma_norm = estimate_mean(q);
    c.rhs_norm = zn / m + 2.0 * std::sqrt(2.0) / std::sqrt(m) * (n - 1) * sep;
    c.rhs_entries = 2.0 * std::sqrt(2.0 * m) * sep;
    c.in_regime = m >= 0.5 * sep * sep;
    bool pass = !c.in_regime || c.lemma_norm.upper() <= c.rhs_norm;
    for (int j = 0; j + 1 < n; ++j) {
      for (std::size_t i = 0; i < N; ++i)
        q[i] = samples[i].censored ? m : std::min(samples[i].entries[static_cast<std::size_t>(j)], m);
      c.lemma_entries.push_back(estimate_mean(q));
      pass = pass && c.lemma_entries.back().upper() <= c.rhs_entries;
    }
    // With x = x~ both sides are exact: nothing moves.
    if (sep == 0.0) pass = c.lemma_norm.mean == std::min(zn / m, 1.0);
    c.pass = pass;
    ok = ok && pass;
    any = any || c.in_regime;
    rep.checks.push_back(std::move(c));
  }
  rep.pass = ok && any && rep.max_untouched_drift == 0.0;
  return rep;
}

// ------------------------------------------------------------------ exit

std::pair<GroupElement, GroupElement> pair_with_center(const Vector& center_x, const SkewMatrix& center_z,
                                                       const Vector& dx, const SkewMatrix& zeta) {
  const Vector x = center_x - 0.5 * dx;
  const Vector xt = center_x + 0.5 * dx;
  const SkewMatrix half = 0.5 * (zeta + 0.5 * symplectic(x, xt));
  return {GroupElement(x, center_z - half), GroupElement(xt, center_z + half)};
}

json ExitReport::summary() const {
  json lv = json::array();
  for (const auto& l : levels)
    lv.push_back({{"dx_norm", l.dx_norm},
                  {"zeta_norm", l.zeta_norm},
                  {"p", l.p},
                  {"p_ci_upper", l.p_ci_upper},
                  {"ratio", finite_or_null(l.ratio)},
                  {"exited", l.exited},
                  {"unresolved", l.unresolved}});
  return {{"levels", lv},
          {"ratio_spread", finite_or_null(ratio_spread)},
          {"criterion", "max ratio / min ratio <= 2, ratio = p / (|dx| + max(|zeta|, |zeta|^2))"},
          {"pass", pass}};
}

ExitReport exit_time_experiment(const ExperimentConfig& cfg, int threads) {
  const ExitParams& ep = cfg.exit;
  if (!(ep.alpha <= ep.gamma)) throw ConfigError("exit: requires 0 < alpha <= gamma");
  const StartPair sp = start_pair(cfg);
  const GroupElement defect0 = fiber_defect(sp.g, sp.g_tilde);
  if (defect0.x.norm() > 2.0 / std::sqrt(cfg.n - 1.0))
    throw ConfigError("exit: requires |x - x~| <= 2 / sqrt(n - 1)");
  const PseudoCube cube = PseudoCube::midpoint(sp.g, sp.g_tilde, ep.alpha, ep.gamma);
  CouplingOptions base = cfg.coupling_options();
  base.mode = Fidelity::Path;
  const std::size_t N = cfg.replicas;

  ExitReport rep;
  for (int r = 0; r <= ep.refinements; ++r) {
    const double scale = std::ldexp(1.0, -r);
    const auto [g, gt] = pair_with_center(cube.center_x, cube.center_z, scale * defect0.x, scale * defect0.z);
    std::vector<char> exited(N, 0), unresolved(N, 0);
    parallel_for(N, threads, [&](std::size_t i) {
      if (g == gt) return;
      if (cube_violation(cube, g) != ExitReason::None || cube_violation(cube, gt) != ExitReason::None) {
        exited[i] = 1;
        return;
      }
      RngStream rng(cfg.seed, stream_id(20 + static_cast<std::uint64_t>(r), i));
      CouplingOptions opts = base;
      opts.observer = [&cube](const CoupledPair& p) {
        return cube_violation(cube, p.first_original()) == ExitReason::None &&
               cube_violation(cube, p.second_original()) == ExitReason::None;
      };
      const CouplingResult res = global_coupling(g, gt, rng, opts);
      if (res.trace.flags.stopped) exited[i] = 1;
      if (res.trace.flags.censored) unresolved[i] = exited[i] = 1;
    });
    ExitLevel lv;
    lv.dx_norm = scale * defect0.x.norm();
    lv.zeta_norm = scale * defect0.z.norm2();
    lv.exited = static_cast<std::size_t>(std::count(exited.begin(), exited.end(), 1));
    lv.unresolved = static_cast<std::size_t>(std::count(unresolved.begin(), unresolved.end(), 1));
    lv.p = static_cast<double>(lv.exited) / static_cast<double>(N);
    lv.p_ci_upper = clopper_pearson_upper(lv.exited, N);
    const double denom = lv.dx_norm + std::max(lv.zeta_norm, lv.zeta_norm * lv.zeta_norm);
    lv.ratio = denom > 0.0 ? lv.p / denom : kInf;
    rep.levels.push_back(lv);
  }
  double lo = kInf, hi = 0.0;
  bool finite = true;
  for (const auto& l : rep.levels) {
    if (!std::isfinite(l.ratio) || l.p == 0.0) finite = false;
    lo = std::min(lo, l.ratio);
    hi = std::max(hi, l.ratio);
  }
  rep.ratio_spread = finite ? hi / lo : kInf;
  rep.pass = finite && rep.ratio_spread <= 2.0;
  return rep;
}

// -------------------------------------------------------------- gradient

TestFunction test_function(const std::string& name) {
  if (name == "cos_x1") return {name, 1.0, [](const GroupElement& g) { return std::cos(g.x(0)); }};
  if (name == "cos_z12") return {name, 1.0, [](const GroupElement& g) { return std::cos(g.z.at_pair(0)); }};
  if (name == "gauss")
    return {name, 1.0, [](const GroupElement& g) { return std::exp(-0.5 * g.x.squaredNorm() - g.z.norm2()); }};
  if (name == "constant") return {name, 1.0, [](const GroupElement&) { return 1.0; }};
  throw ConfigError("gradient: unknown test function '" + name + "' (cos_x1, cos_z12, gauss, constant)");
}

json GradientReport::summary() const {
  json cs = json::array();
  for (const auto& c : checks)
    cs.push_back({{"t", c.t},
                  {"direction", c.direction},
                  {"epsilon", c.epsilon},
                  {"difference", to_json(c.difference)},
                  {"quotient_upper", c.quotient_upper},
                  {"rhs", c.rhs},
                  {"pass", c.pass},
                  {"coupled_mean_abs", c.coupled_mean_abs},
                  {"coupled_survival", c.coupled_survival},
                  {"coupled_rhs", 2.0 * c.coupled_survival},
                  {"pass_coupled", c.pass_coupled}});
  return {{"checks", cs}, {"pass", pass}};
}

GradientReport gradient_experiment(const ExperimentConfig& cfg, int threads) {
  const TestFunction tf = test_function(cfg.gradient.function);
  const GradientParams& gp = cfg.gradient;
  const CouplingConstants k = constants(cfg.n);
  const GroupElement g = cfg.start;
  const int n = cfg.n;
  std::vector<std::string> dirs;
  if (gp.direction != "vertical") dirs.push_back("horizontal");
  if (gp.direction != "horizontal") dirs.push_back("vertical");

  GradientReport rep;
  rep.pass = true;
  for (std::size_t ti = 0; ti < gp.times.size(); ++ti) {
    const double t = gp.times[ti];
    if (t < 1.0) throw ConfigError("gradient: times must be >= 1");
    for (std::size_t di = 0; di < dirs.size(); ++di) {
      const bool horizontal = dirs[di] == "horizontal";
      GroupElement step = GroupElement::identity(n);
      if (horizontal)
        step.x(0) = gp.epsilon;
      else
        step.z.at_pair(0) = gp.epsilon;
      // Left translation keeps the horizontal distance |Δx| = ε exact and
      // gives |z - z~|_2 = ε for the vertical one.
      const GroupElement gt = group_mul(g, step);

      GradientCheck c;
      c.t = t;
      c.direction = dirs[di];
      c.epsilon = gp.epsilon;
      std::vector<double> diff(cfg.replicas);
      const std::uint64_t tag = 40 + 2 * ti;
      parallel_for(cfg.replicas, threads, [&](std::size_t i) {
        RngStream rng(cfg.seed, stream_id(tag, i));
        const GroupElement w = simulate_endpoint(GroupElement::identity(n), t, std::min(cfg.h, t), rng);
        diff[i] = tf.f(group_mul(g, w)) - tf.f(group_mul(gt, w));
      });
      c.difference = estimate_mean(diff);
      c.quotient_upper = (std::abs(c.difference.mean) + kZ99 * c.difference.standard_error()) / gp.epsilon;
      c.rhs = horizontal ? 2.0 * tf.sup_norm * k.c1 / std::sqrt(t) : tf.sup_norm * k.c2 / t;
      c.pass = c.quotient_upper <= c.rhs;

      // Coupled estimate, states read at time t.
      CouplingOptions opts = cfg.coupling_options();
      opts.mode = Fidelity::Path;
      opts.horizon = t;
      std::vector<double> cd(gp.coupled_replicas);
      std::vector<char> alive(gp.coupled_replicas, 0);
      parallel_for(gp.coupled_replicas, threads, [&](std::size_t i) {
        RngStream rng(cfg.seed, stream_id(41 + 2 * ti + 100 * di, i));
        const CouplingResult res = global_coupling(g, gt, rng, opts);
        if (res.trace.flags.censored) {
          alive[i] = 1;
          cd[i] = tf.f(res.pair.first_original()) - tf.f(res.pair.second_original());
        } else {
          cd[i] = 0.0;
        }
      });
      c.coupled_mean_abs = std::abs(estimate_mean(cd).mean);
      c.coupled_survival = static_cast<double>(std::count(alive.begin(), alive.end(), 1)) /
                           static_cast<double>(std::max<std::size_t>(gp.coupled_replicas, 1));
      c.pass_coupled = c.coupled_mean_abs <= 2.0 * tf.sup_norm * c.coupled_survival + 1e-12;
      rep.pass = rep.pass && c.pass && c.pass_coupled;
      rep.checks.push_back(std::move(c));
    }
  }
  return rep;
}

}  // namespace carnot
