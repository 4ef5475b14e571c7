#pragma once

#include <cstdint>
#include <vector>

#include "obayes/factorial.hpp"

namespace obayes {

struct HeterogeneityReport {
  double shannon_normalized = 0.0;
  double cv_factors = 0.0;
  int model_count = 0;
};

/// Normalized Shannon heterogeneity -sum p log p / log(normalizer_count),
/// with 0 log 0 = 0. The pipeline normalizes by the size of the full
/// model space (2^k), which is what reproduces the published values.
double shannon_heterogeneity(const std::vector<double>& probs,
                             std::size_t normalizer_count);

/// Coefficient of variation of the factor-activity probabilities,
/// population standard deviation over mean.
double cv_factor_activity(const std::vector<double>& activity);

struct ContrastEntry {
  Term term;
  double value = 0.0;     ///< (column . y) / 2^{k-1}
  double quantile = 0.0;  ///< (rank - 0.5) / m by ascending contrast
};

/// Effect contrasts of a complete (unreplicated) 2^k factorial, for all
/// terms up to the given interaction order, with normal-plot positions.
std::vector<ContrastEntry> factorial_contrasts(const DesignTable& design, int order);

struct RobustReferenceOptions {
  std::vector<int> sizes{8, 16, 32, 64};  ///< multiples of the 2^k base
  std::uint64_t seed = 1;
  double sigma = 2.0;
  double intercept = 50.0;
  double final_tolerance = 0.05;
};

struct RobustReferenceResult {
  std::vector<int> sizes;
  std::vector<double> kl;       ///< KL(reference predictive || robust predictive)
  bool trend_decreasing = false;  ///< each value < 1.1 x previous
  bool final_below_tolerance = false;
};

/// Consistency check between the reference-prior predictive and the
/// robust-prior predictive (numerically mixed over g) on a growing
/// replicated full factorial with seeded synthetic responses. The noise
/// vector is projected onto the model's residual space and scaled to
/// df * sigma^2, so the fitted coefficients equal the generating ones and
/// the divergence curve is a deterministic function of the sizes.
RobustReferenceResult robust_vs_reference_check(const FactorSpace& space,
                                                const FactorModel& model,
                                                const RobustReferenceOptions& options);

}  // namespace obayes
