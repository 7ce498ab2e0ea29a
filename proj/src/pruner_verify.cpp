#include <cmath>

#include "gravity/ppml.hpp"
#include "gravity/pruner.hpp"

namespace gravity {

VerificationResult verify_uninformative(const GravityPanel& original, const PruneReport& report,
                                        const EstimateConfig& config, double tolerance) {
  VerificationResult result;
  const GravityPanel pruned = apply_report(original, report);
  try {
    result.beta_original = fit(original, config).beta;
  } catch (const NonConvergenceError& e) {
    result.status = VerificationStatus::Inconclusive;
    result.note = std::string("unpruned fit did not converge: ") + e.what();
    return result;
  }
  if (report.dropped.empty()) {
    result.beta_pruned = result.beta_original;
    result.status = VerificationStatus::Consistent;
    return result;
  }
  result.beta_pruned = fit(pruned, config).beta;
  for (std::size_t j = 0; j < result.beta_original.size(); ++j) {
    const double diff = std::abs(result.beta_original[j] - result.beta_pruned[j]);
    if (!(diff <= result.max_abs_difference)) result.max_abs_difference = diff;
  }
  result.status = result.max_abs_difference <= tolerance ? VerificationStatus::Consistent
                                                         : VerificationStatus::Inconsistent;
  return result;
}

}  // namespace gravity
