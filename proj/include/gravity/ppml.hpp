#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "gravity/error.hpp"
#include "gravity/panel.hpp"

namespace gravity {

struct EstimateConfig {
  // Relative tolerance on every first-order-condition family.
  double foc_tolerance = 1e-8;
  int max_outer_iterations = 200;
  // Cap on fixed-effect sweeps (and on demeaning sweeps) per outer step.
  int max_inner_iterations = 10000;
  // Bound on |beta'(x - mean x)| before exponentiation.
  double exponent_cap = 30.0;
  // Convergence threshold of the weighted alternating demeaning.
  double demean_tolerance = 1e-11;

  // Throws ConfigError.
  void validate() const;
};

struct FocResiduals {
  double beta = 0.0;
  double exporter_time = 0.0;
  double importer_time = 0.0;
  double pair = 0.0;

  double max() const noexcept;
};

// Fixed-effect values of one grouping, sorted by cell key. Values are on the
// log scale; -infinity marks a cell whose flows are all zero.
class FixedEffectMap {
 public:
  FixedEffectMap() = default;
  FixedEffectMap(Grouping grouping, std::vector<CellKey> keys, std::vector<double> values);

  Grouping grouping() const noexcept { return grouping_; }
  std::size_t size() const noexcept { return keys_.size(); }
  std::span<const CellKey> keys() const noexcept { return keys_; }
  std::span<const double> values() const noexcept { return values_; }
  const double* find(const CellKey& key) const;
  double at(const CellKey& key) const;

 private:
  Grouping grouping_ = Grouping::Pair;
  std::vector<CellKey> keys_;
  std::vector<double> values_;
};

struct FixedEffects {
  FixedEffectMap alpha;  // (i,t)
  FixedEffectMap gamma;  // (j,t)
  FixedEffectMap eta;    // (i,j)
};

// Only beta and the fitted means are identified; the fixed effects are one
// arbitrary representative of the solution set.
struct FitResult {
  std::vector<std::string> covariate_names;
  std::vector<double> beta;
  FixedEffects fixed_effects;
  std::vector<double> fitted;  // lambda per observation, panel order
  int outer_iterations = 0;
  long inner_sweeps = 0;
  FocResiduals foc_residuals;
  bool converged = false;
  double log_likelihood = 0.0;  // sum(y log lambda - lambda)
  PanelDims dims;
  std::vector<std::string> warnings;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, FocResiduals residuals, int iterations)
      : Error(what), residuals_(residuals), iterations_(iterations) {}
  const FocResiduals& residuals() const noexcept { return residuals_; }
  int iterations() const noexcept { return iterations_; }

 private:
  FocResiduals residuals_;
  int iterations_;
};

// Three-way FE-PPML. Solves the first-order conditions for beta and the
// exporter-time, importer-time and pair effects: a Newton iteration on the
// profile likelihood of beta with the effects concentrated out at each step.
FitResult fit(const GravityPanel& panel, const EstimateConfig& config = {});

// Effects solving the three fixed-effect FOC families for fixed beta, by
// cyclic closed-form multiplicative updates. `warm_start` may be null.
FixedEffects concentrate_fixed_effects(const GravityPanel& panel, std::span<const double> beta,
                                       const FixedEffects* warm_start, const EstimateConfig& config = {});

// One Newton step on the profile objective from `current` (whose effects must
// match its beta): beta + (sum lambda xt xt')^-1 sum (y - lambda) xt, where xt
// is x with the three groupings projected out in the lambda-weighted inner
// product.
std::vector<double> fit_beta_step(const GravityPanel& panel, const FitResult& current,
                                  const EstimateConfig& config = {});

// lambda = exp(beta'x + alpha + gamma + eta) recomputed from the parameters.
std::vector<double> predict(const GravityPanel& panel, const FitResult& fit);

// Audit of the first-order conditions: per family, the max over cells of
// |sum (y - lambda)(.)| / (1 + sum y over the cell). For beta the cell is the
// whole sample, per covariate.
FocResiduals foc_residuals(const GravityPanel& panel, const FitResult& fit);

// Covariates with the three groupings partialled out under weights `weights`.
// Row-major n x K.
std::vector<double> partial_out_fixed_effects(const GravityPanel& panel, std::span<const double> weights,
                                              const EstimateConfig& config = {});

enum class ClusterGrouping { Pair, Exporter, Importer, None };

struct ClusterSpec {
  ClusterGrouping grouping = ClusterGrouping::Pair;
};

std::string_view to_string(ClusterGrouping grouping);
ClusterGrouping parse_cluster_grouping(std::string_view text);

// Sandwich H^-1 (sum_g s_g s_g') H^-1 on the concentrated score, with
// s_g = sum_{obs in g} (y - lambda) xt and H = sum lambda xt xt'.
Eigen::MatrixXd cluster_robust_vcov(const GravityPanel& panel, const FitResult& fit, ClusterSpec spec,
                                    const EstimateConfig& config = {});

std::vector<double> standard_errors(const Eigen::MatrixXd& vcov);

}  // namespace gravity
