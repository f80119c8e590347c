#pragma once

#include "carnot/group.hpp"
#include "carnot/homogeneous.hpp"
#include "carnot/kernels.hpp"
#include "carnot/rng.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace carnot {

struct CouplingConstants {
  int n;
  double b_n;
  double beta_n;
  double c1;
  double c2;
};

CouplingConstants constants(int n);

enum class Fidelity { Event, Path };
enum class PhaseKind { Reflection, Line, Coupled };

const char* to_string(Fidelity f);
Fidelity parse_fidelity(const std::string& s);

// Raised when a line exceeds its block budget.
class CouplingDiagnostic : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Both coupled states, tracked as the first state plus the defect
// g^{-1} g~ = (Δx, ζ), in a working orthonormal frame. Keeping the defect
// explicit means entries of ζ that a step cannot touch are left bitwise
// unchanged.
class CoupledPair {
 public:
  CoupledPair(const GroupElement& g, const GroupElement& g_tilde);

  int dim() const { return first_.dim(); }
  const GroupElement& first() const { return first_; }
  GroupElement second() const;
  const GroupElement& defect() const { return defect_; }
  // Working coordinates are frame() times original coordinates.
  const Matrix& frame() const { return frame_; }
  GroupElement first_original() const;
  GroupElement second_original() const;
  GroupElement defect_original() const;

  double elapsed() const { return elapsed_; }
  PhaseKind phase() const { return phase_; }
  int line() const { return line_; }
  // False once time has advanced without simulating the paths; the
  // defect stays exact, the states do not.
  bool tracks_states() const { return tracks_states_; }

  // first ← first ⋆ (d, 0), second ← second ⋆ (d~, 0).
  void advance(const Vector& d, const Vector& d_tilde, double dt);
  void advance_untracked(double dt);
  // Change the working frame by the orthogonal q.
  void rotate(const Matrix& q);
  void set_phase(PhaseKind p, int line = -1);
  GroupElement& defect_mut() { return defect_; }

 private:
  GroupElement first_;
  GroupElement defect_;
  Matrix frame_;
  double elapsed_ = 0.0;
  PhaseKind phase_ = PhaseKind::Reflection;
  int line_ = -1;
  bool tracks_states_ = true;
};

struct CouplingOptions {
  Fidelity mode = Fidelity::Event;
  int m = 0;  // 0 selects 2n
  double h = 1e-3;
  double horizon = std::numeric_limits<double>::infinity();
  int max_blocks = 64;
  bool block_diagonalize = true;
  // Called after every simulated step; returning false ends the run.
  std::function<bool(const CoupledPair&)> observer;

  int truncation(int n) const;
};

struct StopFlags {
  bool censored = false;  // reached the horizon first
  bool stopped = false;   // the observer asked to stop
  bool ended() const { return censored || stopped; }
};

struct ReflectionOutcome {
  double tau0 = 0.0;
  StopFlags flags;
};

// Mirror coupling of the horizontal parts, simulated on the grid, until
// they meet. On return the defect has Δx = 0 exactly (unless ended early).
ReflectionOutcome run_reflection(CoupledPair& pair, RngStream& rng, const CouplingOptions& opts);

// Only the meeting time: first passage of a Brownian motion to |Δx|/2.
double sample_reflection_time(double separation, RngStream& rng);

struct ReflectionResult {
  double tau0 = 0.0;
  StopFlags flags;
  std::optional<CoupledPair> pair;  // present in path mode
};
ReflectionResult reflection_phase(const GroupElement& g, const GroupElement& g_tilde, Fidelity mode,
                                  RngStream& rng, const CouplingOptions& opts = {});

struct BlockOutcome {
  double length = 0.0;
  bool success = false;
  double m_next = 0.0;
  double sigma_inv_w_norm = 0.0;
  double stopped_value = 0.0;  // mirrored component at min(σ, 1)
  double identity_residual = 0.0;  // path mode: |v_T - m_next v|
  StopFlags flags;
};

// Per-line bookkeeping shared by successive blocks.
struct LineContext {
  int line = 0;
  Vector direction;  // unit, fixed for the whole line
  double v0_norm = 0.0;
  double m_value = 0.0;
  int block_index = 0;

  static LineContext start(const SkewMatrix& zeta, int line);
  double block_length() const;
};

// One block; the pair must be on a common fiber with line `ctx.line`
// carrying the remaining defect. Updates ctx and the pair.
BlockOutcome line_block(CoupledPair& pair, LineContext& ctx, RngStream& rng, const CouplingOptions& opts);

struct LineTrace {
  int line = 0;
  int blocks = 0;
  double tau_line = 0.0;
  double v0_norm = 0.0;
  double max_identity_residual = 0.0;
};

struct LineOutcome {
  LineTrace trace;
  StopFlags flags;
};

LineOutcome line_coupling(CoupledPair& pair, int line, RngStream& rng, const CouplingOptions& opts);

struct FiberOutcome {
  double tau = 0.0;
  std::vector<LineTrace> lines;
  StopFlags flags;
};

FiberOutcome fiber_coupling(CoupledPair& pair, RngStream& rng, const CouplingOptions& opts);

struct CouplingTrace {
  double tau0 = 0.0;
  std::vector<LineTrace> per_line;
  double tau = 0.0;  // +inf when censored or stopped
  Fidelity mode = Fidelity::Event;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  StopFlags flags;
};

struct CouplingResult {
  double tau = 0.0;
  CouplingTrace trace;
  CoupledPair pair;
};

CouplingResult global_coupling(const GroupElement& g, const GroupElement& g_tilde, RngStream& rng,
                               const CouplingOptions& opts);

struct LiftedResult {
  CouplingResult coupling;
  GroupElement lift;
  GroupElement lift_tilde;
};

// Lifts both points to the free group (minimum-norm vertical parts, and a
// minimum-norm defect for the partner), couples there. The projected pair
// lift_morphism(·) meets no later than the lifted one.
LiftedResult lifted_coupling(const HomogeneousGroupSpec& spec, const HomogeneousElement& a,
                             const HomogeneousElement& a_tilde, RngStream& rng, const CouplingOptions& opts);

}  // namespace carnot
