#pragma once

#include "carnot/config.hpp"
#include "carnot/coupling.hpp"
#include "carnot/path.hpp"
#include "carnot/stats.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace carnot {

// Stream ids: a tag in the high bits keeps arms of one experiment apart.
inline std::uint64_t stream_id(std::uint64_t tag, std::uint64_t index) { return (tag << 40) | index; }

struct RateCurve {
  std::vector<double> t_grid;
  std::vector<double> survival;
  std::vector<double> ci_upper;
  std::vector<double> bound;
  std::vector<bool> in_regime;
  std::size_t n_replicas = 0;
  std::size_t censored = 0;
  std::string bound_name;
  double regime_start = 0.0;
  bool pass = false;
};

// Builds the curve from coupling times (+inf for runs that never met).
RateCurve make_rate_curve(std::vector<double> taus, const std::vector<double>& t_grid);
void write_rate_csv(std::ostream& out, const RateCurve& c);
nlohmann::json to_json(const RateCurve& c);

struct RateReport {
  RateCurve curve;
  std::vector<CouplingTrace> traces;
  nlohmann::json summary() const;
};

// Which bound applies, evaluated for the start pair of the config.
struct BoundSpec {
  std::string name;
  double regime_start = 0.0;
  std::function<double(double)> value;
};
BoundSpec rate_bound(const ExperimentConfig& cfg);

// Runs cfg.replicas couplings (global, fiber-only, or first line only).
RateReport rate_experiment(const ExperimentConfig& cfg, int threads);

nlohmann::json to_json(const CouplingTrace& t);

struct TvPoint {
  double t = 0.0;
  double tv_plugin = 0.0;
  double noise_floor = 0.0;
  double tv_lower = 0.0;
  double bound = 0.0;
  double survival = 0.0;
  double survival_se = 0.0;
  bool in_regime = false;
  bool pass_bound = true;
  bool pass_coupling = true;
};

struct TvReport {
  std::vector<TvPoint> points;
  bool pass = false;
  nlohmann::json summary() const;
};

// Binned TV over a partition of the coordinates; any partition gives a
// lower bound of the true distance, the plug-in estimate is corrected by a
// permutation estimate of its sampling bias.
struct BinnedTv {
  double plugin = 0.0;
  double floor = 0.0;
  double lower = 0.0;
};
BinnedTv binned_tv(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b, int bins,
                   int permutations, RngStream& rng);

TvReport tv_bound_experiment(const ExperimentConfig& cfg, int threads);

struct AreaCheck {
  double truncation = 0.0;
  MeanEstimate lemma_norm;  // (|ζ_τ0|_2 / m) ∧ 1
  double rhs_norm = 0.0;
  std::vector<MeanEstimate> lemma_entries;  // |ζ^{1,j}_τ0 - ζ^{1,j}_0| ∧ m, j = 2..n
  double rhs_entries = 0.0;
  bool in_regime = true;  // m >= |Δx|^2 / 2 for the norm lemma
  bool pass = false;
};

struct AreaReport {
  std::vector<AreaCheck> checks;
  std::size_t censored = 0;
  double max_untouched_drift = 0.0;  // entries (i,j), i,j >= 2, in the aligned frame
  bool pass = false;
  nlohmann::json summary() const;
};

AreaReport area_lemma_experiment(const ExperimentConfig& cfg, int threads);

struct ExitLevel {
  double dx_norm = 0.0;
  double zeta_norm = 0.0;
  double p = 0.0;
  double p_ci_upper = 0.0;
  double ratio = 0.0;
  std::size_t exited = 0;
  std::size_t unresolved = 0;  // hit the horizon before either event
};

struct ExitReport {
  std::vector<ExitLevel> levels;
  double ratio_spread = 0.0;  // max / min
  bool pass = false;
  nlohmann::json summary() const;
};

// The pair with center (x̂, ẑ) and defect (Δx, ζ).
std::pair<GroupElement, GroupElement> pair_with_center(const Vector& center_x, const SkewMatrix& center_z,
                                                       const Vector& dx, const SkewMatrix& zeta);

ExitReport exit_time_experiment(const ExperimentConfig& cfg, int threads);

struct TestFunction {
  std::string name;
  double sup_norm;
  std::function<double(const GroupElement&)> f;
};
TestFunction test_function(const std::string& name);

struct GradientCheck {
  double t = 0.0;
  std::string direction;
  double epsilon = 0.0;
  MeanEstimate difference;     // f(g ⋆ W_t) - f(g~ ⋆ W_t)
  double quotient_upper = 0.0;  // (|mean| + z se) / distance
  double rhs = 0.0;
  bool pass = false;
  // Coupled-pair side: |mean of f(B_t) - f(B~_t)| <= 2 |f| P(τ > t)
  double coupled_mean_abs = 0.0;
  double coupled_survival = 0.0;
  bool pass_coupled = false;
};

struct GradientReport {
  std::vector<GradientCheck> checks;
  bool pass = false;
  nlohmann::json summary() const;
};

GradientReport gradient_experiment(const ExperimentConfig& cfg, int threads);

nlohmann::json to_json(const MeanEstimate& e);

}  // namespace carnot
