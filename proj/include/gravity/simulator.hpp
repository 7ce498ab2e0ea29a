#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gravity/corrections.hpp"
#include "gravity/panel.hpp"
#include "gravity/ppml.hpp"

namespace gravity {

enum class Attrition { EtaSmallest, RandomPairs, None };

// UnitMean: omega = exp(-s2/2 + sqrt(s2) z), s2 = log(1 + lambda^-2), so that
// E[omega] = 1 and Var(omega) = lambda^-2. Literal: the noise scale is
// s2^(-1/2) instead of s2^(1/2), which does not have unit mean.
enum class ErrorMode { UnitMean, Literal };

std::string_view to_string(Attrition attrition);
std::string_view to_string(ErrorMode mode);
Attrition parse_attrition(std::string_view text);
ErrorMode parse_error_mode(std::string_view text);

// Multiplicative error omega for mean lambda and standard normal z.
double error_term(double lambda, double z, ErrorMode mode);

struct DgpConfig {
  int N = 200;
  int T = 5;
  double beta_true = 1.0;
  double psi = 0.0;
  Attrition attrition = Attrition::EtaSmallest;
  ErrorMode error_mode = ErrorMode::UnitMean;
  std::uint64_t seed = 0;
  // Variances of alpha/gamma/eta, nu and xi.
  double effect_variance = 0.25;
  double nu_variance = 0.7071067811865476;  // sqrt(0.5)
  double xi_variance = 0.91;

  // Throws ConfigError.
  void validate() const;
  // floor(psi * N^2).
  std::size_t attrited_pairs() const;
};

// Latent draws of one DGP-I sample. Layouts: alpha/gamma [t * N + i];
// eta [i * N + j]; per-observation arrays [(i * N + j) * T + (t - 1)];
// nu and z also carry the t = 0 start values at [(i * N + j) * (T + 1) + t].
struct DgpLatent {
  int N = 0;
  int T = 0;
  std::vector<double> alpha, gamma, eta;
  std::vector<double> nu, z;
  std::vector<double> xi, lambda, omega;
};

struct DgpDraw {
  GravityPanel panel;  // with self-pairs, n = N^2 T, order (i, j, t)
  DgpLatent latent;
};

// Balanced DGP-I panel:
//   x_ijt = 0.5 x_ij,t-1 + alpha_it + gamma_jt + eta_ij + nu_ijt,  x_ij0 = eta_ij + nu_ij0
//   z_ijt = 0.3 z_ij,t-1 + xi_ijt,  z_ij0 ~ N(0, 1)
//   lambda = exp(beta x + alpha + gamma + eta),  y = lambda * omega
// with alpha, gamma, eta ~ N(0, 0.25), nu ~ N(0, sqrt(0.5)), xi ~ N(0, 0.91)
// (second argument is the variance). Draw order: alpha (t-major), gamma,
// eta (i-major), then per pair (nu_0, z_0, then nu_t, xi_t for t = 1..T).
DgpDraw generate_dgp1(const DgpConfig& config);

// EtaSmallest: zero all flows of the floor(psi N^2) pairs with the smallest
// eta (ties by pair index). RandomPairs: delete that many uniformly chosen
// pairs. None: identity.
GravityPanel apply_attrition(const DgpDraw& draw, const DgpConfig& config);

// N = floor(20 / (1 - psi)), keeping the average number of partners near 20
// under random pair attrition.
int heuristic_validation_design(double psi);

struct EstimatorSummary {
  std::string name;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double mean_estimate = 0.0;
  double bias_pct = 0.0;      // mean(beta_hat / beta - 1) * 100
  double sd = 0.0;            // sample SD of beta_hat
  double bias_over_sd = 0.0;  // (mean - beta) / sd, 0 when sd == 0
  double bias_se_pct = 0.0;   // Monte Carlo standard error of bias_pct
};

struct MonteCarloSummary {
  DgpConfig config;
  std::size_t replications = 0;
  double mean_n_star = 0.0;
  double n_bar = 0.0;  // mean_n_star / (N T)
  std::vector<EstimatorSummary> estimators;
  bool high_failure_rate = false;  // any estimator fails in > 0.1% of replications
  std::vector<std::string> failure_messages;  // first few, for diagnosis

  const EstimatorSummary& estimator(const std::string& name) const;
};

struct MonteCarloOptions {
  EstimateConfig estimate;
  int threads = 1;
};

// Per-replication estimates, for callers that aggregate themselves.
struct ReplicationOutcome {
  bool ok = false;
  double n_star = 0.0;
  std::vector<double> estimates;  // per estimator, NaN on failure
  std::string error;
};

// Statistics of a set of replication outcomes, aggregated in index order.
MonteCarloSummary summarize(const DgpConfig& config, const std::vector<std::string>& estimators,
                            const std::vector<ReplicationOutcome>& outcomes);

ReplicationOutcome run_replication(const DgpConfig& config, std::size_t replication,
                                   const std::vector<std::string>& estimators, const CorrectionRegistry& registry,
                                   const EstimateConfig& estimate);

// Replication r uses seed derive_seed(config.seed, 0, r); replications run on
// `threads` workers and are aggregated in replication order, so the result
// does not depend on the thread count. Estimator "feppml" is the uncorrected
// fit; every other name must be registered.
MonteCarloSummary run_monte_carlo(const DgpConfig& config, std::size_t replications,
                                  const std::vector<std::string>& estimators, const CorrectionRegistry& registry,
                                  const MonteCarloOptions& options = {});

// CSV in the layout psi,N_bar,mean_n_star,<est>_bias_pct,<est>_sd,<est>_bias_over_sd...
std::string summary_csv_header(const std::vector<std::string>& estimators);
std::string summary_csv_row(const MonteCarloSummary& summary);

}  // namespace gravity
