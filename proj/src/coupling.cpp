#include "carnot/coupling.hpp"

#include "carnot/path.hpp"

#include <cmath>
#include <numbers>

namespace carnot {

CouplingConstants constants(int n) {
  if (n < 2) throw std::invalid_argument("constants: n must be >= 2, got " + std::to_string(n));
  const double pi = std::numbers::pi;
  const double b = n == 2 ? 2.0 * pi : 2.0 * std::sqrt(2.0 * pi * n);
  const double beta = std::pow(n - 1.0, 1.5) * b;
  return {n, b, beta, 4.0 * std::sqrt(beta) * (n - 1) + 1.0 / std::sqrt(pi), 2.0 * beta};
}

const char* to_string(Fidelity f) { return f == Fidelity::Event ? "event" : "path"; }

Fidelity parse_fidelity(const std::string& s) {
  if (s == "event") return Fidelity::Event;
  if (s == "path") return Fidelity::Path;
  throw std::invalid_argument("unknown mode '" + s + "' (expected event or path)");
}

int CouplingOptions::truncation(int n) const {
  const int mm = m == 0 ? 2 * n : m;
  if (mm < n + 1) throw std::invalid_argument("truncation m must be >= n + 1, got " + std::to_string(mm));
  return mm;
}

// ---------------------------------------------------------------- pair

CoupledPair::CoupledPair(const GroupElement& g, const GroupElement& g_tilde)
    : first_(g), defect_(fiber_defect(g, g_tilde)), frame_(Matrix::Identity(g.dim(), g.dim())) {}

GroupElement CoupledPair::second() const { return group_mul(first_, defect_); }
GroupElement CoupledPair::first_original() const { return apply_orthogonal(frame_.transpose(), first_); }
GroupElement CoupledPair::second_original() const { return apply_orthogonal(frame_.transpose(), second()); }
GroupElement CoupledPair::defect_original() const { return apply_orthogonal(frame_.transpose(), defect_); }

void CoupledPair::advance(const Vector& d, const Vector& d_tilde, double dt) {
  const int n = dim();
  // defect ← (-d, 0) ⋆ defect ⋆ (d~, 0)
  const Vector& dx = defect_.x;
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double inc = dx(i) * (d_tilde(j) + d(j)) - dx(j) * (d_tilde(i) + d(i)) - (d(i) * d_tilde(j) - d(j) * d_tilde(i));
      defect_.z.at_pair(k++) += 0.5 * inc;
    }
  for (int i = 0; i < n; ++i) defect_.x(i) += d_tilde(i) - d(i);
  step_in_place(first_, d);
  elapsed_ += dt;
}

void CoupledPair::advance_untracked(double dt) {
  elapsed_ += dt;
  tracks_states_ = false;
}

void CoupledPair::rotate(const Matrix& q) {
  first_ = apply_orthogonal(q, first_);
  defect_ = apply_orthogonal(q, defect_);
  frame_ = q * frame_;
}

void CoupledPair::set_phase(PhaseKind p, int line) {
  phase_ = p;
  line_ = line;
}

// Helper used by step-based phases: applies a (possibly shortened) step,
// honours the horizon and the observer.
namespace {

void step_path(CoupledPair& pair, Vector& d, Vector& d_tilde, double dt, const CouplingOptions& opts,
               StopFlags& flags) {
  const double left = opts.horizon - pair.elapsed();
  if (dt > left) {
    const double theta = left > 0.0 ? left / dt : 0.0;
    d *= theta;
    d_tilde *= theta;
    pair.advance(d, d_tilde, std::max(left, 0.0));
    flags.censored = true;
  } else {
    pair.advance(d, d_tilde, dt);
  }
  if (opts.observer && !opts.observer(pair)) flags.stopped = true;
}

}  // namespace

// ---------------------------------------------------------- reflection

double sample_reflection_time(double separation, RngStream& rng) {
  if (separation == 0.0) return 0.0;
  return sample_first_passage(0.5 * separation, rng);
}

ReflectionOutcome run_reflection(CoupledPair& pair, RngStream& rng, const CouplingOptions& opts) {
  ReflectionOutcome out;
  const int n = pair.dim();
  const double start = pair.elapsed();
  pair.set_phase(PhaseKind::Reflection);
  const double sep = pair.defect().x.norm();
  if (sep == 0.0) return out;
  if (!(opts.h > 0.0)) throw std::invalid_argument("reflection needs a step h > 0");

  // Frame with x - x~ = sep e_1, i.e. Δx = -sep e_1.
  pair.rotate(horizontal_alignment(-pair.defect().x));
  Vector& dx = pair.defect_mut().x;
  dx.setZero();
  dx(0) = -sep;

  if (opts.observer && !opts.observer(pair)) {
    out.flags.stopped = true;
    out.tau0 = pair.elapsed() - start;
    return out;
  }

  const double sd = std::sqrt(opts.h);
  Vector d(n), d_tilde(n);
  while (true) {
    for (int i = 0; i < n; ++i) d(i) = sd * rng.normal();
    d_tilde = d;
    d_tilde(0) = -d(0);
    const double before = pair.defect().x(0);
    const double after = before - 2.0 * d(0);
    if (after >= 0.0) {
      // Meeting inside the step; cut the chord where the gap closes.
      const double theta = before / (2.0 * d(0));
      if (pair.elapsed() + theta * opts.h <= opts.horizon) {
        d *= theta;
        d_tilde *= theta;
        pair.advance(d, d_tilde, theta * opts.h);
        pair.defect_mut().x(0) = 0.0;
        if (opts.observer && !opts.observer(pair)) out.flags.stopped = true;
        break;
      }
    }
    step_path(pair, d, d_tilde, opts.h, opts, out.flags);
    if (out.flags.ended()) break;
  }
  out.tau0 = pair.elapsed() - start;
  return out;
}

ReflectionResult reflection_phase(const GroupElement& g, const GroupElement& g_tilde, Fidelity mode,
                                  RngStream& rng, const CouplingOptions& opts) {
  require_same_dim(g, g_tilde, "reflection_phase");
  ReflectionResult out;
  if (mode == Fidelity::Event) {
    out.tau0 = sample_reflection_time((g_tilde.x - g.x).norm(), rng);
    out.flags.censored = out.tau0 > opts.horizon;
    return out;
  }
  CoupledPair pair(g, g_tilde);
  const ReflectionOutcome r = run_reflection(pair, rng, opts);
  out.tau0 = r.tau0;
  out.flags = r.flags;
  out.pair = std::move(pair);
  return out;
}

// --------------------------------------------------------------- lines

LineContext LineContext::start(const SkewMatrix& zeta, int line) {
  LineContext c;
  c.line = line;
  const Vector v0 = zeta.line(line);
  c.v0_norm = v0.norm();
  c.direction = c.v0_norm > 0.0 ? Vector(v0 / c.v0_norm) : Vector(Vector::Zero(v0.size()));
  c.m_value = c.v0_norm;
  return c;
}

double LineContext::block_length() const { return std::ldexp(v0_norm / 3.0, block_index); }

namespace {

void set_line(SkewMatrix& z, int line, const Vector& values) {
  int k = 0;
  for (int j = 0; j < z.dim(); ++j)
    if (j != line) z.set(line, j, values(k++));
}

struct MirrorDraw {
  EndpointHit hit;
  double level;
};

// Mirrored component outcome for threshold (π / 2T) M s, any sign of M.
MirrorDraw draw_mirror(double T, double m_value, double s, RngStream& rng) {
  const double level = std::numbers::pi / (2.0 * T) * m_value * s;
  const double sign = level >= 0.0 ? 1.0 : -1.0;
  EndpointHit e = sample_endpoint_and_hit(std::abs(level), rng);
  e.stopped *= sign;
  e.terminal *= sign;
  return {e, level};
}

void finish_block(BlockOutcome& out, LineContext& ctx, const EndpointHit& e, double s) {
  out.success = e.hit;
  out.stopped_value = e.stopped;
  out.sigma_inv_w_norm = s;
  out.m_next = e.hit ? 0.0 : ctx.m_value - (2.0 * out.length / std::numbers::pi) * e.stopped / s;
  ctx.m_value = out.m_next;
  ++ctx.block_index;
}

BlockOutcome event_block(CoupledPair& pair, LineContext& ctx, RngStream& rng, const CouplingOptions& opts) {
  BlockOutcome out;
  const int n = pair.dim();
  out.length = ctx.block_length();
  if (pair.elapsed() + out.length > opts.horizon) {
    out.flags.censored = true;
    return out;
  }
  const WishartDraw wd = sample_wishart_vector(n, opts.truncation(n), ctx.direction, rng);
  const MirrorDraw md = draw_mirror(out.length, ctx.m_value, wd.sigma_inv_w_norm, rng);
  finish_block(out, ctx, md.hit, wd.sigma_inv_w_norm);
  SkewMatrix& z = pair.defect_mut().z;
  if (out.success)
    z.clear_line(ctx.line);
  else
    set_line(z, ctx.line, out.m_next * ctx.direction);
  pair.advance_untracked(out.length);
  return out;
}

BlockOutcome path_block(CoupledPair& pair, LineContext& ctx, RngStream& rng, const CouplingOptions& opts) {
  BlockOutcome out;
  const int n = pair.dim();
  const int m = opts.truncation(n);
  const int a = ctx.line;
  const double T = ctx.block_length();
  out.length = T;
  if (!(opts.h > 0.0)) throw std::invalid_argument("path mode needs a step h > 0");
  // Short blocks still get enough grid points to resolve m sine modes.
  const long long K = std::max<long long>(4LL * (m + 1), static_cast<long long>(std::ceil(T / opts.h - 1e-9)));
  const double dt = T / static_cast<double>(K);
  const double sd = std::sqrt(dt);

  // Increments of the n-1 coordinates the two paths share.
  Matrix inc(n - 1, K);
  for (long long k = 0; k < K; ++k)
    for (int r = 0; r < n - 1; ++r) inc(r, k) = sd * rng.normal();

  // Coefficient matrix of those paths against the sine basis, built with
  // the same trapezoid weights the area update uses, so the surgery below
  // lands the line exactly on m_next * direction.
  Matrix rmat = Matrix::Zero(n - 1, m);
  std::vector<double> s_prev(m + 1, 0.0), s_next(m + 1, 0.0);
  for (long long k = 0; k < K; ++k) {
    for (int j = 1; j <= m; ++j) {
      s_next[j] = grid_sine(j, k + 1, K);
      const double avg = 0.5 * (s_prev[j] + s_next[j]);
      for (int r = 0; r < n - 1; ++r) rmat(r, j - 1) += avg * inc(r, k);
    }
    std::swap(s_prev, s_next);
  }
  rmat *= std::sqrt(2.0 / T);
  const WishartDraw wd = wishart_from_matrix(std::move(rmat), ctx.direction);
  const double s = wd.sigma_inv_w_norm;
  const MirrorDraw md = draw_mirror(T, ctx.m_value, s, rng);

  // Coefficients: along f1 = Σ^{-1/2} w / s the first path gets the
  // Brownian endpoint, the second its mirror; the rest is shared.
  Vector f1(m);
  for (int j = 0; j < m; ++j) f1(j) = (j + 1) * wd.w(j) / s;
  Vector g(m);
  for (int j = 0; j < m; ++j) g(j) = rng.normal();
  const Vector xi = md.hit.terminal * f1 + g - f1.dot(g) * f1;
  const Vector dxi = -2.0 * md.hit.stopped * f1;
  const double xi0 = rng.normal();
  const std::vector<double> bridge = sample_bridge(T, K, rng);
  const Vector proj = kl_projections(bridge, T, m);

  std::vector<double> coef_path(m + 1, 0.0), coef_diff(m + 1, 0.0);
  for (int j = 1; j <= m; ++j) {
    const double scale = std::sqrt(2.0 * T) / (j * std::numbers::pi);
    coef_path[j] = (xi(j - 1) - proj(j - 1)) * scale;
    coef_diff[j] = dxi(j - 1) * scale;
  }
  const double drift = xi0 / std::sqrt(T);

  Vector d(n), d_tilde(n);
  double base_prev = 0.0, diff_prev = pair.defect().x(a);
  for (long long k = 0; k < K; ++k) {
    double base_next = bridge[k + 1] + drift * (T * static_cast<double>(k + 1) / static_cast<double>(K));
    double diff_next = 0.0;
    for (int j = 1; j <= m; ++j) {
      const double sk = grid_sine(j, k + 1, K);
      base_next += coef_path[j] * sk;
      diff_next += coef_diff[j] * sk;
    }
    int r = 0;
    for (int i = 0; i < n; ++i)
      if (i != a) d(i) = inc(r++, k);
    d(a) = base_next - base_prev;
    d_tilde = d;
    d_tilde(a) += diff_next - diff_prev;
    step_path(pair, d, d_tilde, dt, opts, out.flags);
    if (out.flags.censored) return out;
    pair.defect_mut().x(a) = diff_next;
    if (out.flags.stopped) return out;
    base_prev = base_next;
    diff_prev = diff_next;
  }

  finish_block(out, ctx, md.hit, s);
  SkewMatrix& z = pair.defect_mut().z;
  const Vector expected = out.m_next * ctx.direction;
  out.identity_residual = (z.line(a) - expected).norm();
  if (out.success)
    z.clear_line(a);
  else
    set_line(z, a, expected);
  return out;
}

}  // namespace

BlockOutcome line_block(CoupledPair& pair, LineContext& ctx, RngStream& rng, const CouplingOptions& opts) {
  if (pair.defect().x.lpNorm<Eigen::Infinity>() != 0.0)
    throw std::invalid_argument("line_block: the pair is not on a common fiber");
  if (ctx.v0_norm == 0.0) throw std::invalid_argument("line_block: the line carries no defect");
  pair.set_phase(PhaseKind::Line, ctx.line);
  return opts.mode == Fidelity::Event ? event_block(pair, ctx, rng, opts) : path_block(pair, ctx, rng, opts);
}

LineOutcome line_coupling(CoupledPair& pair, int line, RngStream& rng, const CouplingOptions& opts) {
  if (line < 0 || line >= pair.dim()) throw std::invalid_argument("line_coupling: line index out of range");
  LineOutcome out;
  LineContext ctx = LineContext::start(pair.defect().z, line);
  out.trace.line = line;
  out.trace.v0_norm = ctx.v0_norm;
  if (ctx.v0_norm == 0.0) return out;
  const double start = pair.elapsed();
  while (true) {
    if (ctx.block_index >= opts.max_blocks)
      throw CouplingDiagnostic("line " + std::to_string(line) + " did not couple within " +
                               std::to_string(opts.max_blocks) + " blocks");
    const BlockOutcome b = line_block(pair, ctx, rng, opts);
    out.trace.max_identity_residual = std::max(out.trace.max_identity_residual, b.identity_residual);
    if (b.flags.ended()) {
      out.flags = b.flags;
      out.trace.blocks = ctx.block_index + 1;
      out.trace.tau_line = pair.elapsed() - start;
      return out;
    }
    if (b.success) break;
  }
  out.trace.blocks = ctx.block_index;
  // Sum of the geometric schedule, evaluated in closed form.
  out.trace.tau_line = ctx.v0_norm * (std::ldexp(1.0, ctx.block_index) - 1.0) / 3.0;
  return out;
}

FiberOutcome fiber_coupling(CoupledPair& pair, RngStream& rng, const CouplingOptions& opts) {
  if (pair.defect().x.lpNorm<Eigen::Infinity>() != 0.0)
    throw std::invalid_argument("fiber_coupling: the pair is not on a common fiber");
  FiberOutcome out;
  const double start = pair.elapsed();
  if (opts.block_diagonalize && !pair.defect().z.is_zero()) {
    const CanonicalForm cf = block_diagonalize(pair.defect().z);
    pair.rotate(cf.p.transpose());
    pair.defect_mut().z = cf.canonical;
  }
  for (int line = 0; line + 1 < pair.dim(); ++line) {
    if (pair.defect().z.line(line).lpNorm<Eigen::Infinity>() == 0.0) continue;
    const LineOutcome lo = line_coupling(pair, line, rng, opts);
    out.lines.push_back(lo.trace);
    if (lo.flags.ended()) {
      out.flags = lo.flags;
      out.tau = pair.elapsed() - start;
      return out;
    }
  }
  double tau = 0.0;
  for (const auto& l : out.lines) tau += l.tau_line;
  out.tau = tau;
  pair.set_phase(PhaseKind::Coupled);
  return out;
}

CouplingResult global_coupling(const GroupElement& g, const GroupElement& g_tilde, RngStream& rng,
                               const CouplingOptions& opts) {
  require_same_dim(g, g_tilde, "global_coupling");
  CouplingResult res{0.0, {}, CoupledPair(g, g_tilde)};
  CouplingTrace& tr = res.trace;
  tr.mode = opts.mode;
  tr.seed = rng.seed();
  tr.stream_id = rng.stream_id();
  const double inf = std::numeric_limits<double>::infinity();

  if (res.pair.defect().x.lpNorm<Eigen::Infinity>() != 0.0) {
    // The fiber defect at the meeting time has no closed-form law, so the
    // reflection is always simulated on the grid.
    const ReflectionOutcome r = run_reflection(res.pair, rng, opts);
    tr.tau0 = r.tau0;
    if (r.flags.ended()) {
      tr.flags = r.flags;
      tr.tau = res.tau = inf;
      return res;
    }
  }
  const FiberOutcome f = fiber_coupling(res.pair, rng, opts);
  tr.per_line = f.lines;
  tr.flags = f.flags;
  tr.tau = res.tau = f.flags.ended() ? inf : tr.tau0 + f.tau;
  return res;
}

LiftedResult lifted_coupling(const HomogeneousGroupSpec& spec, const HomogeneousElement& a,
                             const HomogeneousElement& a_tilde, RngStream& rng, const CouplingOptions& opts) {
  const GroupElement g = lift_point(spec, a);
  const GroupElement g_tilde = lift_partner(spec, g, a, a_tilde);
  return {global_coupling(g, g_tilde, rng, opts), g, g_tilde};
}

}  // namespace carnot
