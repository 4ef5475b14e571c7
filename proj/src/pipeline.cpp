#include "obayes/pipeline.hpp"

#include "obayes/errors.hpp"

namespace obayes {

HeterogeneityReport PosteriorAnalysis::heterogeneity() const {
  HeterogeneityReport rep;
  std::vector<double> probs;
  probs.reserve(posterior.entries.size());
  for (const auto& e : posterior.entries) probs.push_back(e.prob);
  rep.model_count = static_cast<int>(models.size());
  rep.shannon_normalized =
      shannon_heterogeneity(probs, std::size_t{1} << space.k);
  rep.cv_factors = cv_factor_activity(activity);
  return rep;
}

PosteriorAnalysis analyze_posterior(const LoadedDesign& input,
                                    const ExperimentConfig& config,
                                    bool with_block) {
  config.validate();
  PosteriorAnalysis a;
  a.space = FactorSpace::make(input.factor_names, config.interaction_order);
  a.design = input.table;
  a.with_block = with_block;
  if (with_block && !a.design.has_block())
    throw ValidationError("block analysis requested but design has no block column");

  a.models = enumerate_models(a.space, a.design, with_block, &a.enumeration);
  a.fits.reserve(a.models.size());
  for (const auto& em : a.models) a.fits.push_back(fit_ols(em.matrix, a.design.y));
  a.posterior =
      model_posterior(a.models, a.fits, config.objective_prior(a.space.k));
  a.activity = factor_activity(a.posterior, a.models, a.space.k);
  return a;
}

FollowupResult run_followup(const LoadedDesign& input, const ExperimentConfig& config) {
  // The discrimination search is defined on unblocked fits.
  const PosteriorAnalysis a = analyze_posterior(input, config, /*with_block=*/false);
  const Eigen::MatrixXd candidates = enumerate_candidate_runs(a.space);

  ModelDiscrimination crit = [&] {
    if (config.criterion == "cmd") {
      std::vector<ConventionalFit> fits;
      fits.reserve(a.models.size());
      for (const auto& em : a.models)
        fits.push_back(fit_conventional(em.matrix, a.design.y, config.gamma));
      const ModelPosterior conv_post = conventional_posterior(
          a.models, fits, ModelSpacePrior::fixed_pi(config.pi, a.space.k));
      return ModelDiscrimination::conventional(a.models, fits, conv_post,
                                               candidates, config.prob_floor);
    }
    return ModelDiscrimination::objective(a.models, a.fits, a.posterior,
                                          candidates, config.prob_floor);
  }();

  SearchOptions opts;
  opts.n_star = config.n_star;
  opts.top_k = config.top_k;
  opts.exchange = config.exchange;
  if (!config.exchange) {
    // Surfaces DesignSpaceOverflow before any work starts.
    count_followup_designs(crit.candidate_count(), config.n_star);
  }

  FollowupResult r;
  r.ranked = crit.search(opts);
  r.criterion = config.criterion;
  r.n_star = config.n_star;
  r.models_used = crit.models_used();
  r.candidate_count = crit.candidate_count();
  r.exhaustive = !config.exchange;
  r.saturated_excluded = crit.saturated_excluded();
  return r;
}

CombinedResult run_combined(const LoadedDesign& screening, const LoadedDesign& followup,
                            const ExperimentConfig& config) {
  if (screening.factor_names != followup.factor_names)
    throw ValidationError(
        "screening and follow-up files disagree on factor columns");

  CombinedResult result;
  result.screening = analyze_posterior(screening, config, /*with_block=*/false);
  result.before = result.screening.heterogeneity();

  if (followup.table.n() == 0) {
    // Nothing to join: the combined analysis reduces to the screening one.
    result.combined = result.screening;
    result.after = result.before;
    return result;
  }

  LoadedDesign joined;
  joined.factor_names = screening.factor_names;
  const int n1 = screening.table.n(), n2 = followup.table.n();
  joined.table.runs.resize(n1 + n2, screening.table.k());
  joined.table.runs.topRows(n1) = screening.table.runs;
  joined.table.runs.bottomRows(n2) = followup.table.runs;
  joined.table.y.resize(n1 + n2);
  joined.table.y.head(n1) = screening.table.y;
  joined.table.y.tail(n2) = followup.table.y;
  joined.table.block.assign(n1, "screening");
  joined.table.block.insert(joined.table.block.end(), n2, "follow-up");

  result.combined = analyze_posterior(joined, config, /*with_block=*/true);
  result.after = result.combined.heterogeneity();
  return result;
}

}  // namespace obayes
