#include "gravity/ppml.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "gravity/cells.hpp"

namespace gravity {

void EstimateConfig::validate() const {
  if (!(foc_tolerance > 0.0)) throw ConfigError("foc_tolerance must be > 0");
  if (!(demean_tolerance > 0.0)) throw ConfigError("demean_tolerance must be > 0");
  if (!(exponent_cap >= 1.0)) throw ConfigError("exponent_cap must be >= 1");
  if (max_outer_iterations < 1) throw ConfigError("max_outer_iterations must be >= 1");
  if (max_inner_iterations < 1) throw ConfigError("max_inner_iterations must be >= 1");
}

double FocResiduals::max() const noexcept { return std::max({beta, exporter_time, importer_time, pair}); }

FixedEffectMap::FixedEffectMap(Grouping grouping, std::vector<CellKey> keys, std::vector<double> values)
    : grouping_(grouping), keys_(std::move(keys)), values_(std::move(values)) {
  if (keys_.size() != values_.size()) throw DataError("fixed-effect map keys and values differ in length");
  if (!std::is_sorted(keys_.begin(), keys_.end())) throw DataError("fixed-effect map keys must be sorted");
}

const double* FixedEffectMap::find(const CellKey& key) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return nullptr;
  return &values_[static_cast<std::size_t>(it - keys_.begin())];
}

double FixedEffectMap::at(const CellKey& key) const {
  const double* value = find(key);
  if (!value) {
    throw DataError("no fixed effect for " + std::string(to_string(grouping_)) + " cell (" +
                    std::to_string(key.first) + "," + std::to_string(key.second) + ")");
  }
  return *value;
}

std::string_view to_string(ClusterGrouping grouping) {
  switch (grouping) {
    case ClusterGrouping::Pair: return "pair";
    case ClusterGrouping::Exporter: return "exporter";
    case ClusterGrouping::Importer: return "importer";
    case ClusterGrouping::None: break;
  }
  return "none";
}

ClusterGrouping parse_cluster_grouping(std::string_view text) {
  if (text == "pair") return ClusterGrouping::Pair;
  if (text == "exporter") return ClusterGrouping::Exporter;
  if (text == "importer") return ClusterGrouping::Importer;
  if (text == "none") return ClusterGrouping::None;
  throw ConfigError("unknown cluster grouping '" + std::string(text) + "' (expected pair, exporter, importer, none)");
}

namespace {

constexpr std::array<Grouping, 3> kGroupings = {Grouping::ExporterTime, Grouping::ImporterTime, Grouping::Pair};

// Static structure of an estimation problem.
struct Problem {
  const GravityPanel& panel;
  std::size_t n;
  std::size_t K;
  std::array<CellIndex, 3> cells;
  std::array<std::vector<double>, 3> flow_sums;
  std::array<std::vector<std::size_t>, 3> counts;
  std::vector<double> x_mean;
  double total_flow = 0.0;

  explicit Problem(const GravityPanel& p)
      : panel(p),
        n(p.size()),
        K(p.num_covariates()),
        cells{CellIndex(p, Grouping::ExporterTime), CellIndex(p, Grouping::ImporterTime),
              CellIndex(p, Grouping::Pair)},
        x_mean(K, 0.0) {
    for (std::size_t f = 0; f < 3; ++f) {
      std::vector<CompensatedSum> sums(cells[f].num_cells());
      counts[f].assign(cells[f].num_cells(), 0);
      for (std::size_t k = 0; k < n; ++k) {
        const auto c = static_cast<std::size_t>(cells[f].cell(k));
        sums[c].add(p.flow(k));
        ++counts[f][c];
      }
      flow_sums[f].resize(sums.size());
      for (std::size_t c = 0; c < sums.size(); ++c) flow_sums[f][c] = sums[c].value();
    }
    CompensatedSum total;
    for (std::size_t k = 0; k < n; ++k) total.add(p.flow(k));
    total_flow = total.value();
    for (std::size_t j = 0; j < K; ++j) {
      CompensatedSum s;
      for (std::size_t k = 0; k < n; ++k) s.add(p.covariate(k, j));
      x_mean[j] = n > 0 ? s.value() / static_cast<double>(n) : 0.0;
    }
  }
};

// Multiplicative parametrization: lambda_k = mu_k * A[a_k] * G[g_k] * E[e_k]
// with mu_k = exp(beta'(x_k - x_mean)).
struct State {
  std::vector<double> beta;
  std::vector<double> mu;
  std::array<std::vector<double>, 3> factor;
  bool clamp_active = false;
};

void set_beta(const Problem& P, State& S, std::span<const double> beta, double cap) {
  S.beta.assign(beta.begin(), beta.end());
  S.mu.resize(P.n);
  S.clamp_active = false;
  const auto X = P.panel.covariate_matrix();
  for (std::size_t k = 0; k < P.n; ++k) {
    double index = 0.0;
    for (std::size_t j = 0; j < P.K; ++j) index += beta[j] * (X[k * P.K + j] - P.x_mean[j]);
    if (index > cap) {
      index = cap;
      S.clamp_active = true;
    } else if (index < -cap) {
      index = -cap;
      S.clamp_active = true;
    }
    S.mu[k] = std::exp(index);
  }
}

// Exporter-time and importer-time factors at one, pair factors at the mean
// flow of the pair.
void init_factors(const Problem& P, State& S) {
  S.factor[0].assign(P.cells[0].num_cells(), 1.0);
  S.factor[1].assign(P.cells[1].num_cells(), 1.0);
  S.factor[2].resize(P.cells[2].num_cells());
  for (std::size_t c = 0; c < S.factor[2].size(); ++c) {
    S.factor[2][c] = P.flow_sums[2][c] / static_cast<double>(P.counts[2][c]);
  }
}

void factors_from_effects(const Problem& P, State& S, const FixedEffects& fe) {
  const std::array<const FixedEffectMap*, 3> maps = {&fe.alpha, &fe.gamma, &fe.eta};
  double shift = 0.0;
  for (std::size_t j = 0; j < P.K; ++j) shift += S.beta[j] * P.x_mean[j];
  for (std::size_t f = 0; f < 3; ++f) {
    S.factor[f].resize(P.cells[f].num_cells());
    for (std::size_t c = 0; c < S.factor[f].size(); ++c) {
      const double* value = maps[f]->find(P.cells[f].key(static_cast<std::int32_t>(c)));
      if (!value) {
        S.factor[f][c] = f == 2 ? P.flow_sums[2][c] / static_cast<double>(P.counts[2][c]) : 1.0;
        continue;
      }
      const double log_value = f == 0 ? *value + shift : *value;
      S.factor[f][c] = std::exp(log_value);
    }
  }
}

FixedEffects effects_from_factors(const Problem& P, const State& S) {
  double shift = 0.0;
  for (std::size_t j = 0; j < P.K; ++j) shift += S.beta[j] * P.x_mean[j];
  std::array<FixedEffectMap, 3> maps;
  for (std::size_t f = 0; f < 3; ++f) {
    const auto keys = P.cells[f].keys();
    std::vector<double> values(keys.size());
    for (std::size_t c = 0; c < keys.size(); ++c) {
      const double a = S.factor[f][c];
      values[c] = a > 0.0 ? std::log(a) - (f == 0 ? shift : 0.0) : -std::numeric_limits<double>::infinity();
    }
    maps[f] = FixedEffectMap(kGroupings[f], std::vector<CellKey>(keys.begin(), keys.end()), std::move(values));
  }
  return {std::move(maps[0]), std::move(maps[1]), std::move(maps[2])};
}

void compute_lambda(const Problem& P, const State& S, std::vector<double>& lambda) {
  lambda.resize(P.n);
  const std::int32_t* a = P.cells[0].cells().data();
  const std::int32_t* g = P.cells[1].cells().data();
  const std::int32_t* e = P.cells[2].cells().data();
  const double* A = S.factor[0].data();
  const double* G = S.factor[1].data();
  const double* E = S.factor[2].data();
  for (std::size_t k = 0; k < P.n; ++k) lambda[k] = S.mu[k] * A[a[k]] * G[g[k]] * E[e[k]];
}

// One cyclic pass: each family's factor solves its own FOC given the others.
void sweep(const Problem& P, State& S, std::vector<double>& denominator) {
  const std::int32_t* ids[3] = {P.cells[0].cells().data(), P.cells[1].cells().data(), P.cells[2].cells().data()};
  const double* mu = S.mu.data();
  for (std::size_t f = 0; f < 3; ++f) {
    const std::size_t o1 = (f + 1) % 3, o2 = (f + 2) % 3;
    const std::int32_t* own = ids[f];
    const std::int32_t* i1 = ids[o1];
    const std::int32_t* i2 = ids[o2];
    const double* F1 = S.factor[o1].data();
    const double* F2 = S.factor[o2].data();
    denominator.assign(P.cells[f].num_cells(), 0.0);
    double* den = denominator.data();
    for (std::size_t k = 0; k < P.n; ++k) den[own[k]] += mu[k] * F1[i1[k]] * F2[i2[k]];
    double* F = S.factor[f].data();
    const double* ysum = P.flow_sums[f].data();
    for (std::size_t c = 0; c < denominator.size(); ++c) {
      F[c] = ysum[c] > 0.0 ? ysum[c] / den[c] : 0.0;
    }
  }
}

// Fixed-effect FOC residuals at lambda.
void fe_residuals(const Problem& P, std::span<const double> lambda, FocResiduals& out,
                  std::array<std::vector<double>, 3>& scratch) {
  double* worst[3] = {&out.exporter_time, &out.importer_time, &out.pair};
  for (std::size_t f = 0; f < 3; ++f) {
    scratch[f].assign(P.cells[f].num_cells(), 0.0);
    const std::int32_t* ids = P.cells[f].cells().data();
    double* s = scratch[f].data();
    for (std::size_t k = 0; k < P.n; ++k) s[ids[k]] += lambda[k];
    double m = 0.0;
    for (std::size_t c = 0; c < scratch[f].size(); ++c) {
      const double r = std::abs(P.flow_sums[f][c] - s[c]) / (1.0 + P.flow_sums[f][c]);
      m = std::max(m, r);
    }
    *worst[f] = m;
  }
}

double beta_residual(const Problem& P, std::span<const double> lambda) {
  const auto X = P.panel.covariate_matrix();
  double worst = 0.0;
  for (std::size_t j = 0; j < P.K; ++j) {
    CompensatedSum s;
    for (std::size_t k = 0; k < P.n; ++k) s.add((P.panel.flow(k) - lambda[k]) * X[k * P.K + j]);
    worst = std::max(worst, std::abs(s.value()) / (1.0 + P.total_flow));
  }
  return worst;
}

double log_likelihood(const Problem& P, std::span<const double> lambda) {
  CompensatedSum s;
  for (std::size_t k = 0; k < P.n; ++k) {
    const double y = P.panel.flow(k);
    if (y > 0.0) s.add(y * std::log(lambda[k]));
    s.add(-lambda[k]);
  }
  return s.value();
}

// Sweeps until the exporter-time and importer-time residuals fall below tol
// (the pair family is exact after each pass). Leaves lambda current.
long concentrate(const Problem& P, State& S, double tol, int max_sweeps, std::vector<double>& lambda) {
  std::vector<double> denominator;
  std::array<std::vector<double>, 3> scratch;
  FocResiduals r;
  for (int s = 1; s <= max_sweeps; ++s) {
    sweep(P, S, denominator);
    compute_lambda(P, S, lambda);
    fe_residuals(P, lambda, r, scratch);
    if (r.max() <= tol) return s;
  }
  r.beta = P.K > 0 ? beta_residual(P, lambda) : 0.0;
  throw NonConvergenceError("fixed-effect concentration did not converge within " + std::to_string(max_sweeps) +
                                " sweeps (last residual " + std::to_string(r.max()) + ")",
                            r, max_sweeps);
}

// Weighted alternating projections. `xt` holds the starting point on entry
// (x itself, or any earlier partialled-out x) and the result on exit.
void demean(const Problem& P, std::span<const double> weights, std::vector<double>& xt, double tol,
            int max_sweeps) {
  const std::size_t K = P.K;
  if (K == 0) return;
  std::array<std::vector<double>, 3> weight_sums;
  for (std::size_t f = 0; f < 3; ++f) {
    weight_sums[f].assign(P.cells[f].num_cells(), 0.0);
    const std::int32_t* ids = P.cells[f].cells().data();
    for (std::size_t k = 0; k < P.n; ++k) weight_sums[f][ids[k]] += weights[k];
  }
  std::vector<double> numer, before(P.n);
  for (std::size_t j = 0; j < K; ++j) {
    bool done = false;
    for (int s = 0; s < max_sweeps && !done; ++s) {
      for (std::size_t k = 0; k < P.n; ++k) before[k] = xt[k * K + j];
      for (std::size_t f = 0; f < 3; ++f) {
        const std::int32_t* ids = P.cells[f].cells().data();
        numer.assign(P.cells[f].num_cells(), 0.0);
        for (std::size_t k = 0; k < P.n; ++k) numer[ids[k]] += weights[k] * xt[k * K + j];
        const double* wsum = weight_sums[f].data();
        for (std::size_t k = 0; k < P.n; ++k) {
          const auto c = ids[k];
          if (wsum[c] > 0.0) xt[k * K + j] -= numer[c] / wsum[c];
        }
      }
      double delta = 0.0;
      for (std::size_t k = 0; k < P.n; ++k) {
        if (weights[k] <= 0.0) continue;
        delta = std::max(delta, std::abs(xt[k * K + j] - before[k]) / (1.0 + std::abs(before[k])));
      }
      done = delta < tol;
    }
    if (!done) {
      throw NonConvergenceError("weighted demeaning of '" + P.panel.covariate_names()[j] +
                                    "' did not converge within " + std::to_string(max_sweeps) + " sweeps",
                                {}, max_sweeps);
    }
  }
}

struct NewtonSystem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd score;
};

NewtonSystem newton_system(const Problem& P, std::span<const double> lambda, std::span<const double> xt) {
  const std::size_t K = P.K;
  NewtonSystem sys{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K)),
                   Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K))};
  for (std::size_t k = 0; k < P.n; ++k) {
    const double resid = P.panel.flow(k) - lambda[k];
    for (std::size_t a = 0; a < K; ++a) {
      const double xa = xt[k * K + a];
      sys.score(static_cast<Eigen::Index>(a)) += resid * xa;
      for (std::size_t b = 0; b <= a; ++b) {
        sys.hessian(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += lambda[k] * xa * xt[k * K + b];
      }
    }
  }
  sys.hessian = sys.hessian.selfadjointView<Eigen::Lower>();
  return sys;
}

// Throws IdentificationError when a partialled-out column carries no
// variation relative to the raw column, or when the columns are collinear.
void check_identification(const Problem& P, std::span<const double> weights, std::span<const double> xt,
                          const Eigen::MatrixXd& hessian) {
  const std::size_t K = P.K;
  double wsum = 0.0;
  for (std::size_t k = 0; k < P.n; ++k) wsum += weights[k];
  for (std::size_t j = 0; j < K; ++j) {
    double mean = 0.0;
    for (std::size_t k = 0; k < P.n; ++k) mean += weights[k] * P.panel.covariate(k, j);
    mean = wsum > 0.0 ? mean / wsum : 0.0;
    double raw = 0.0, within = 0.0;
    for (std::size_t k = 0; k < P.n; ++k) {
      const double d = P.panel.covariate(k, j) - mean;
      raw += weights[k] * d * d;
      within += weights[k] * xt[k * K + j] * xt[k * K + j];
    }
    if (!(within > 1e-9 * raw) || raw == 0.0) {
      const std::string& name = P.panel.covariate_names()[j];
      throw IdentificationError("covariate '" + name + "' is absorbed by the fixed effects", name);
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hessian);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(K)) {
    throw IdentificationError("covariates are collinear after partialling out the fixed effects");
  }
}

std::vector<std::string> structural_warnings(const Problem& P) {
  std::vector<std::string> warnings;
  for (std::size_t f = 0; f < 3; ++f) {
    std::size_t zeros = 0, singles = 0;
    for (std::size_t c = 0; c < P.flow_sums[f].size(); ++c) {
      if (P.flow_sums[f][c] == 0.0) ++zeros;
      if (P.counts[f][c] == 1) ++singles;
    }
    const std::string name(to_string(kGroupings[f]));
    if (zeros > 0) {
      warnings.push_back(std::to_string(zeros) + " " + name +
                         " cells have zero total flow; their effects diverge to -inf (prune the panel first)");
    }
    if (singles > 0) {
      warnings.push_back(std::to_string(singles) + " " + name + " cells are singletons (prune the panel first)");
    }
  }
  return warnings;
}

FocResiduals all_residuals(const Problem& P, std::span<const double> lambda) {
  FocResiduals r;
  std::array<std::vector<double>, 3> scratch;
  fe_residuals(P, lambda, r, scratch);
  r.beta = P.K > 0 ? beta_residual(P, lambda) : 0.0;
  return r;
}

}  // namespace

FitResult fit(const GravityPanel& panel, const EstimateConfig& config) {
  config.validate();
  if (panel.empty()) throw EmptyPanelError("cannot fit an empty panel");
  const Problem P(panel);
  const double inner_tol = 0.1 * config.foc_tolerance;

  FitResult result;
  result.covariate_names = panel.covariate_names();
  result.dims = panel.dims();
  result.warnings = structural_warnings(P);

  State S;
  set_beta(P, S, std::vector<double>(P.K, 0.0), config.exponent_cap);
  init_factors(P, S);
  std::vector<double> lambda;
  result.inner_sweeps += concentrate(P, S, inner_tol, config.max_inner_iterations, lambda);
  double ll = log_likelihood(P, lambda);

  std::vector<double> xt(panel.covariate_matrix().begin(), panel.covariate_matrix().end());
  FocResiduals r = all_residuals(P, lambda);
  int outer = 0;
  for (;;) {
    Eigen::VectorXd direction;
    if (P.K > 0) {
      demean(P, lambda, xt, config.demean_tolerance, config.max_inner_iterations);
      const NewtonSystem sys = newton_system(P, lambda, xt);
      check_identification(P, lambda, xt, sys.hessian);
      direction = sys.hessian.ldlt().solve(sys.score);
    }
    // Converged once the first-order conditions hold and the next Newton step
    // would not move beta by more than the tolerance.
    double beta_scale = 1.0;
    for (double b : S.beta) beta_scale = std::max(beta_scale, std::abs(b));
    const double step_size = P.K > 0 ? direction.lpNorm<Eigen::Infinity>() : 0.0;
    if (r.max() <= config.foc_tolerance && step_size <= config.foc_tolerance * beta_scale) break;
    if (outer >= config.max_outer_iterations) {
      throw NonConvergenceError("FE-PPML did not converge within " + std::to_string(config.max_outer_iterations) +
                                    " outer iterations",
                                r, outer);
    }
    ++outer;

    // Step halving on the profile likelihood.
    double step = 1.0;
    bool accepted = false;
    State trial;
    std::vector<double> trial_lambda;
    for (int halving = 0; halving < 40 && !accepted; ++halving, step *= 0.5) {
      std::vector<double> beta(S.beta);
      for (std::size_t j = 0; j < P.K; ++j) beta[j] += step * direction(static_cast<Eigen::Index>(j));
      trial.factor = S.factor;
      set_beta(P, trial, beta, config.exponent_cap);
      result.inner_sweeps += concentrate(P, trial, inner_tol, config.max_inner_iterations, trial_lambda);
      const double trial_ll = log_likelihood(P, trial_lambda);
      accepted = std::isfinite(trial_ll) && trial_ll >= ll - 1e-11 * (1.0 + std::abs(ll));
      if (accepted) ll = trial_ll;
    }
    if (!accepted) {
      throw NonConvergenceError("step halving failed to increase the pseudo-likelihood", r, outer);
    }
    S = std::move(trial);
    lambda = std::move(trial_lambda);
    r = all_residuals(P, lambda);
  }
  if (S.clamp_active) {
    throw NonConvergenceError(
        "exponent cap is active at the solution; the panel likely contains unpruned separated observations", r, outer);
  }

  result.beta = S.beta;
  result.fixed_effects = effects_from_factors(P, S);
  result.fitted = std::move(lambda);
  result.outer_iterations = outer;
  result.foc_residuals = r;
  result.converged = true;
  result.log_likelihood = ll;
  return result;
}

FixedEffects concentrate_fixed_effects(const GravityPanel& panel, std::span<const double> beta,
                                       const FixedEffects* warm_start, const EstimateConfig& config) {
  config.validate();
  if (panel.empty()) throw EmptyPanelError("cannot concentrate effects on an empty panel");
  const Problem P(panel);
  if (beta.size() != P.K) throw ConfigError("beta has the wrong length");
  State S;
  set_beta(P, S, beta, config.exponent_cap);
  if (warm_start) {
    factors_from_effects(P, S, *warm_start);
  } else {
    init_factors(P, S);
  }
  std::vector<double> lambda;
  concentrate(P, S, 0.1 * config.foc_tolerance, config.max_inner_iterations, lambda);
  return effects_from_factors(P, S);
}

std::vector<double> predict(const GravityPanel& panel, const FitResult& fit) {
  const std::size_t K = panel.num_covariates();
  if (fit.beta.size() != K) throw ConfigError("fit and panel disagree on the number of covariates");
  std::vector<double> lambda(panel.size());
  for (std::size_t k = 0; k < panel.size(); ++k) {
    const ObsKey& key = panel.key(k);
    double index = fit.fixed_effects.alpha.at(cell_of(key, Grouping::ExporterTime)) +
                   fit.fixed_effects.gamma.at(cell_of(key, Grouping::ImporterTime)) +
                   fit.fixed_effects.eta.at(cell_of(key, Grouping::Pair));
    for (std::size_t j = 0; j < K; ++j) index += fit.beta[j] * panel.covariate(k, j);
    lambda[k] = std::exp(index);
  }
  return lambda;
}

FocResiduals foc_residuals(const GravityPanel& panel, const FitResult& fit) {
  const Problem P(panel);
  return all_residuals(P, predict(panel, fit));
}

std::vector<double> partial_out_fixed_effects(const GravityPanel& panel, std::span<const double> weights,
                                              const EstimateConfig& config) {
  const Problem P(panel);
  if (weights.size() != P.n) throw ConfigError("weights have the wrong length");
  std::vector<double> xt(panel.covariate_matrix().begin(), panel.covariate_matrix().end());
  demean(P, weights, xt, config.demean_tolerance, config.max_inner_iterations);
  return xt;
}

std::vector<double> fit_beta_step(const GravityPanel& panel, const FitResult& current, const EstimateConfig& config) {
  config.validate();
  const Problem P(panel);
  if (P.K == 0) return {};
  const std::vector<double> lambda = predict(panel, current);
  std::vector<double> xt(panel.covariate_matrix().begin(), panel.covariate_matrix().end());
  demean(P, lambda, xt, config.demean_tolerance, config.max_inner_iterations);
  const NewtonSystem sys = newton_system(P, lambda, xt);
  check_identification(P, lambda, xt, sys.hessian);
  const Eigen::VectorXd direction = sys.hessian.ldlt().solve(sys.score);
  std::vector<double> beta(current.beta);
  for (std::size_t j = 0; j < P.K; ++j) beta[j] += direction(static_cast<Eigen::Index>(j));
  return beta;
}

Eigen::MatrixXd cluster_robust_vcov(const GravityPanel& panel, const FitResult& fit, ClusterSpec spec,
                                    const EstimateConfig& config) {
  const Problem P(panel);
  const std::size_t K = P.K;
  if (K == 0) return Eigen::MatrixXd(0, 0);
  const std::vector<double> lambda = fit.fitted.size() == P.n ? fit.fitted : predict(panel, fit);
  std::vector<double> xt(panel.covariate_matrix().begin(), panel.covariate_matrix().end());
  demean(P, lambda, xt, config.demean_tolerance, config.max_inner_iterations);
  const NewtonSystem sys = newton_system(P, lambda, xt);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.hessian);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(K)) {
    throw IdentificationError("singular concentrated Hessian in covariance estimation");
  }
  const Eigen::MatrixXd h_inv = qr.inverse();

  // Cluster ids.
  std::vector<std::int32_t> cluster(P.n);
  switch (spec.grouping) {
    case ClusterGrouping::Pair:
      for (std::size_t k = 0; k < P.n; ++k) cluster[k] = P.cells[2].cell(k);
      break;
    case ClusterGrouping::Exporter:
      for (std::size_t k = 0; k < P.n; ++k) cluster[k] = panel.key(k).exporter;
      break;
    case ClusterGrouping::Importer:
      for (std::size_t k = 0; k < P.n; ++k) cluster[k] = panel.key(k).importer;
      break;
    case ClusterGrouping::None:
      std::iota(cluster.begin(), cluster.end(), 0);
      break;
  }
  const auto n_clusters = static_cast<std::size_t>(*std::max_element(cluster.begin(), cluster.end())) + 1;
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_clusters), static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < P.n; ++k) {
    const double resid = panel.flow(k) - lambda[k];
    for (std::size_t j = 0; j < K; ++j) {
      scores(cluster[k], static_cast<Eigen::Index>(j)) += resid * xt[k * K + j];
    }
  }
  const Eigen::MatrixXd meat = scores.transpose() * scores;
  Eigen::MatrixXd vcov = h_inv * meat * h_inv;
  return (vcov + vcov.transpose()) / 2.0;
}

std::vector<double> standard_errors(const Eigen::MatrixXd& vcov) {
  std::vector<double> se(static_cast<std::size_t>(vcov.rows()));
  for (Eigen::Index j = 0; j < vcov.rows(); ++j) se[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, vcov(j, j)));
  return se;
}

}  // namespace gravity
