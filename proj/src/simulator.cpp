#include "gravity/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "gravity/cells.hpp"
#include "gravity/pruner.hpp"
#include "gravity/rng.hpp"

namespace gravity {

std::string_view to_string(Attrition attrition) {
  switch (attrition) {
    case Attrition::EtaSmallest: return "eta-smallest";
    case Attrition::RandomPairs: return "random-pairs";
    case Attrition::None: break;
  }
  return "none";
}

std::string_view to_string(ErrorMode mode) { return mode == ErrorMode::UnitMean ? "unit-mean" : "literal"; }

Attrition parse_attrition(std::string_view text) {
  if (text == "eta-smallest") return Attrition::EtaSmallest;
  if (text == "random-pairs") return Attrition::RandomPairs;
  if (text == "none") return Attrition::None;
  throw ConfigError("unknown attrition '" + std::string(text) + "' (expected eta-smallest, random-pairs, none)");
}

ErrorMode parse_error_mode(std::string_view text) {
  if (text == "unit-mean") return ErrorMode::UnitMean;
  if (text == "literal") return ErrorMode::Literal;
  throw ConfigError("unknown error mode '" + std::string(text) + "' (expected unit-mean, literal)");
}

void DgpConfig::validate() const {
  if (N < 2) throw ConfigError("N must be >= 2");
  if (T < 2) throw ConfigError("T must be >= 2");
  if (!(psi >= 0.0 && psi < 1.0)) throw ConfigError("psi must lie in [0, 1)");
  if (!std::isfinite(beta_true)) throw ConfigError("beta must be finite");
  const auto pairs = static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
  if (attrited_pairs() >= pairs) throw ConfigError("attrition would remove every pair");
}

std::size_t DgpConfig::attrited_pairs() const {
  const double pairs = static_cast<double>(N) * static_cast<double>(N);
  return static_cast<std::size_t>(std::floor(psi * pairs));
}

double error_term(double lambda, double z, ErrorMode mode) {
  const double s2 = std::log1p(1.0 / (lambda * lambda));
  const double scale = mode == ErrorMode::UnitMean ? std::sqrt(s2) : 1.0 / std::sqrt(s2);
  return std::exp(-0.5 * s2 + scale * z);
}

DgpDraw generate_dgp1(const DgpConfig& config) {
  config.validate();
  const int N = config.N;
  const int T = config.T;
  const auto NN = static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
  RandomStream rng(config.seed);

  DgpLatent latent;
  latent.N = N;
  latent.T = T;
  latent.alpha.resize(static_cast<std::size_t>(N) * T);
  latent.gamma.resize(static_cast<std::size_t>(N) * T);
  latent.eta.resize(NN);
  latent.nu.resize(NN * (T + 1));
  latent.z.resize(NN * (T + 1));
  latent.xi.resize(NN * T);
  latent.lambda.resize(NN * T);
  latent.omega.resize(NN * T);

  const double nu_variance = config.nu_variance;
  for (auto& a : latent.alpha) a = rng.normal(0.0, config.effect_variance);
  for (auto& g : latent.gamma) g = rng.normal(0.0, config.effect_variance);
  for (auto& e : latent.eta) e = rng.normal(0.0, config.effect_variance);

  std::vector<ObsKey> keys(NN * T);
  std::vector<double> flows(NN * T), covariates(NN * T);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const std::size_t pair = static_cast<std::size_t>(i) * N + j;
      const double eta = latent.eta[pair];
      double* nu = &latent.nu[pair * (T + 1)];
      double* z = &latent.z[pair * (T + 1)];
      nu[0] = rng.normal(0.0, nu_variance);
      z[0] = rng.standard_normal();
      double x_prev = eta + nu[0];
      for (int t = 1; t <= T; ++t) {
        const std::size_t obs = pair * T + (t - 1);
        const double alpha = latent.alpha[static_cast<std::size_t>(t - 1) * N + i];
        const double gamma = latent.gamma[static_cast<std::size_t>(t - 1) * N + j];
        nu[t] = rng.normal(0.0, nu_variance);
        latent.xi[obs] = rng.normal(0.0, config.xi_variance);
        z[t] = 0.3 * z[t - 1] + latent.xi[obs];
        const double x = 0.5 * x_prev + alpha + gamma + eta + nu[t];
        x_prev = x;
        const double lambda = std::exp(config.beta_true * x + alpha + gamma + eta);
        const double omega = error_term(lambda, z[t], config.error_mode);
        latent.lambda[obs] = lambda;
        latent.omega[obs] = omega;
        keys[obs] = {i, j, t - 1};
        flows[obs] = lambda * omega;
        covariates[obs] = x;
      }
    }
  }

  auto maps = std::make_shared<LabelMaps>();
  std::vector<std::string> countries, periods;
  for (int i = 1; i <= N; ++i) countries.push_back(std::to_string(i));
  for (int t = 1; t <= T; ++t) periods.push_back(std::to_string(t));
  maps->exporters = LabelTable::from_labels(countries);
  maps->importers = LabelTable::from_labels(countries);
  maps->periods = LabelTable::from_labels(periods);

  return {GravityPanel(std::move(maps), {"x1"}, std::move(keys), std::move(flows), std::move(covariates)),
          std::move(latent)};
}

GravityPanel apply_attrition(const DgpDraw& draw, const DgpConfig& config) {
  config.validate();
  const std::size_t k = config.attrited_pairs();
  if (config.attrition == Attrition::None || k == 0) return draw.panel;

  const int N = draw.latent.N;
  const auto NN = static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
  if (draw.latent.eta.size() != NN) throw ConfigError("draw does not carry latent pair effects");
  std::vector<char> hit(NN, 0);

  if (config.attrition == Attrition::EtaSmallest) {
    std::vector<std::size_t> order(NN);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& eta = draw.latent.eta;
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                     [&](std::size_t a, std::size_t b) { return eta[a] < eta[b] || (eta[a] == eta[b] && a < b); });
    for (std::size_t r = 0; r < k; ++r) hit[order[r]] = 1;

    std::vector<double> flows(draw.panel.flows().begin(), draw.panel.flows().end());
    for (std::size_t obs = 0; obs < draw.panel.size(); ++obs) {
      const ObsKey& key = draw.panel.key(obs);
      if (hit[static_cast<std::size_t>(key.exporter) * N + key.importer]) flows[obs] = 0.0;
    }
    return draw.panel.with_flows(std::move(flows));
  }

  // Random pairs: partial Fisher-Yates on an independent substream.
  RandomStream rng(derive_seed(config.seed, 1, 0));
  std::vector<std::size_t> pool(NN);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t pick = r + static_cast<std::size_t>(rng.uniform_index(NN - r));
    std::swap(pool[r], pool[pick]);
    hit[pool[r]] = 1;
  }
  return subset(draw.panel, [&](const ObsKey& key) {
    return !hit[static_cast<std::size_t>(key.exporter) * N + key.importer];
  });
}

int heuristic_validation_design(double psi) {
  if (!(psi >= 0.0 && psi <= 0.95)) throw ConfigError("psi must lie in [0, 0.95]");
  // The small offset keeps exact quotients such as 20 / 0.4 from landing just
  // below an integer in floating point.
  return static_cast<int>(std::floor(20.0 / (1.0 - psi) + 1e-9));
}

// ---------------------------------------------------------------------------
// Monte Carlo

const EstimatorSummary& MonteCarloSummary::estimator(const std::string& name) const {
  for (const auto& e : estimators) {
    if (e.name == name) return e;
  }
  throw ConfigError("summary has no estimator '" + name + "'");
}

ReplicationOutcome run_replication(const DgpConfig& config, std::size_t replication,
                                   const std::vector<std::string>& estimators, const CorrectionRegistry& registry,
                                   const EstimateConfig& estimate) {
  ReplicationOutcome outcome;
  outcome.estimates.assign(estimators.size(), std::numeric_limits<double>::quiet_NaN());
  DgpConfig rep = config;
  rep.seed = derive_seed(config.seed, 0, replication);
  try {
    const DgpDraw draw = generate_dgp1(rep);
    const PruneResult pruned = prune(apply_attrition(draw, rep));
    outcome.n_star = static_cast<double>(pruned.report.dims_after.n);
    const FitResult full = fit(pruned.panel, estimate);
    const CorrectionContext context{pruned.panel, estimate, full};
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      if (estimators[e] == "feppml") {
        outcome.estimates[e] = full.beta.at(0);
        continue;
      }
      try {
        outcome.estimates[e] = registry.run(estimators[e], context).beta_corrected.at(0);
      } catch (const Error& err) {
        if (outcome.error.empty()) outcome.error = estimators[e] + ": " + err.what();
      }
    }
    outcome.ok = true;
  } catch (const Error& err) {
    outcome.error = err.what();
  }
  return outcome;
}

MonteCarloSummary summarize(const DgpConfig& config, const std::vector<std::string>& estimators,
                            const std::vector<ReplicationOutcome>& outcomes) {
  MonteCarloSummary summary;
  summary.config = config;
  summary.replications = outcomes.size();

  CompensatedSum n_star;
  std::size_t ok = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    n_star.add(o.n_star);
    ++ok;
  }
  summary.mean_n_star = ok > 0 ? n_star.value() / static_cast<double>(ok) : 0.0;
  summary.n_bar = summary.mean_n_star / (static_cast<double>(config.N) * config.T);

  const double beta = config.beta_true;
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    EstimatorSummary s;
    s.name = estimators[e];
    CompensatedSum sum;
    for (const auto& o : outcomes) {
      const double v = o.estimates.empty() ? std::numeric_limits<double>::quiet_NaN() : o.estimates[e];
      if (std::isfinite(v)) {
        sum.add(v);
        ++s.successes;
      } else {
        ++s.failures;
      }
    }
    if (s.successes > 0) {
      s.mean_estimate = sum.value() / static_cast<double>(s.successes);
      CompensatedSum squares;
      for (const auto& o : outcomes) {
        const double v = o.estimates.empty() ? std::numeric_limits<double>::quiet_NaN() : o.estimates[e];
        if (std::isfinite(v)) squares.add((v - s.mean_estimate) * (v - s.mean_estimate));
      }
      s.sd = s.successes > 1 ? std::sqrt(squares.value() / static_cast<double>(s.successes - 1)) : 0.0;
      s.bias_pct = (s.mean_estimate / beta - 1.0) * 100.0;
      s.bias_over_sd = s.sd > 0.0 ? (s.mean_estimate - beta) / s.sd : 0.0;
      s.bias_se_pct = s.successes > 0 ? s.sd / std::sqrt(static_cast<double>(s.successes)) / std::abs(beta) * 100.0 : 0.0;
    }
    if (outcomes.size() > 0 && static_cast<double>(s.failures) > 0.001 * static_cast<double>(outcomes.size())) {
      summary.high_failure_rate = true;
    }
    summary.estimators.push_back(std::move(s));
  }
  for (const auto& o : outcomes) {
    if (!o.error.empty() && summary.failure_messages.size() < 5) summary.failure_messages.push_back(o.error);
  }
  return summary;
}

MonteCarloSummary run_monte_carlo(const DgpConfig& config, std::size_t replications,
                                  const std::vector<std::string>& estimators, const CorrectionRegistry& registry,
                                  const MonteCarloOptions& options) {
  config.validate();
  options.estimate.validate();
  if (replications < 2) throw ConfigError("at least 2 replications are required");
  if (estimators.empty()) throw ConfigError("no estimators requested");
  for (const auto& name : estimators) {
    if (name != "feppml" && !registry.contains(name)) throw ConfigError("unknown estimator '" + name + "'");
  }

  std::vector<ReplicationOutcome> outcomes(replications);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < replications; r = next++) {
      outcomes[r] = run_replication(config, r, estimators, registry, options.estimate);
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(replications)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return summarize(config, estimators, outcomes);
}

std::string summary_csv_header(const std::vector<std::string>& estimators) {
  std::string header = "psi,N_bar,mean_n_star";
  for (const auto& e : estimators) header += "," + e + "_bias_pct," + e + "_sd," + e + "_bias_over_sd";
  return header;
}

std::string summary_csv_row(const MonteCarloSummary& summary) {
  std::string row = format_double(summary.config.psi) + "," + format_double(summary.n_bar) + "," +
                    format_double(summary.mean_n_star);
  for (const auto& e : summary.estimators) {
    row += "," + format_double(e.bias_pct) + "," + format_double(e.sd) + "," + format_double(e.bias_over_sd);
  }
  return row;
}

}  // namespace gravity
