#pragma once

#include <string>
#include <vector>

#include "obayes/diagnostics.hpp"
#include "obayes/discrimination.hpp"
#include "obayes/io.hpp"
#include "obayes/posterior.hpp"

namespace obayes {

/// One full posterior analysis of a design: admissible model space, fits,
/// robust posterior and factor activity.
struct PosteriorAnalysis {
  FactorSpace space;
  DesignTable design;
  bool with_block = false;
  std::vector<EnumeratedModel> models;
  std::vector<OlsSummary> fits;
  ModelPosterior posterior;
  std::vector<double> activity;
  EnumerationSummary enumeration;

  /// Shannon heterogeneity normalized by the full model-space size 2^k,
  /// plus the activity coefficient of variation.
  HeterogeneityReport heterogeneity() const;
};

PosteriorAnalysis analyze_posterior(const LoadedDesign& input,
                                    const ExperimentConfig& config, bool with_block);

struct FollowupResult {
  std::vector<CriterionScore> ranked;
  std::string criterion;
  int n_star = 0;
  int models_used = 0;
  int candidate_count = 0;
  bool exhaustive = true;
  int saturated_excluded = 0;
};

/// Ranked follow-up designs for the analysis, under the configured
/// criterion. The search always runs on unblocked fits; blocking enters
/// only in the combined re-analysis.
FollowupResult run_followup(const LoadedDesign& input, const ExperimentConfig& config);

struct CombinedResult {
  PosteriorAnalysis screening;  ///< screening runs alone, no block
  PosteriorAnalysis combined;   ///< all runs, block column added
  HeterogeneityReport before;
  HeterogeneityReport after;
};

/// Joins screening and follow-up files (same factor columns required),
/// tags block labels and re-analyzes.
CombinedResult run_combined(const LoadedDesign& screening, const LoadedDesign& followup,
                            const ExperimentConfig& config);

}  // namespace obayes
