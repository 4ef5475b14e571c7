#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "obayes/errors.hpp"
#include "obayes/pipeline.hpp"

namespace {

using namespace obayes;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOverflow = 4;

std::ofstream open_report(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write report file '" + path.string() + "'");
  return out;
}

void print_posterior_table(const PosteriorAnalysis& a, int top_k) {
  std::vector<std::size_t> idx(a.posterior.entries.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return a.posterior.entries[x].prob > a.posterior.entries[y].prob;
  });
  std::printf("Top models (%d of %zu admissible):\n", top_k, a.models.size());
  std::printf("  %-5s %-12s %s\n", "rank", "factors", "posterior probability");
  for (int r = 0; r < top_k && r < static_cast<int>(idx.size()); ++r) {
    const auto i = idx[r];
    std::printf("  %-5d %-12s %.2f\n", r + 1,
                a.models[i].model.label(a.space.names).c_str(),
                a.posterior.entries[i].prob);
  }
  std::printf("Factor activity:\n");
  for (int j = 0; j < a.space.k; ++j)
    std::printf("  %-4s %.2f\n", a.space.names[j].c_str(), a.activity[j]);
  if (a.enumeration.models_with_absorbed_terms > 0)
    std::printf("note: %d model(s) carry aliased interactions absorbed into lower-order terms\n",
                a.enumeration.models_with_absorbed_terms);
  const auto dropped = a.enumeration.dropped_insufficient_df +
                       a.enumeration.dropped_aliasing;
  if (dropped > 0)
    std::printf("note: %d of %llu candidate models inadmissible (%d too large, %d aliased)\n",
                dropped,
                static_cast<unsigned long long>(a.enumeration.total_subsets),
                a.enumeration.dropped_insufficient_df,
                a.enumeration.dropped_aliasing);
}

void write_posterior_reports(const PosteriorAnalysis& a, const ExperimentConfig& cfg,
                             const std::string& stem) {
  if (cfg.format == "json") {
    auto out = open_report(cfg.out_dir, stem + "_posterior.json");
    write_posterior_json(out, a.models, a.posterior, a.space.names);
    auto act = open_report(cfg.out_dir, stem + "_activity.json");
    write_activity_json(act, a.space.names, a.activity);
  } else {
    auto out = open_report(cfg.out_dir, stem + "_posterior.csv");
    write_posterior_csv(out, a.models, a.posterior, a.space.names);
    auto act = open_report(cfg.out_dir, stem + "_activity.csv");
    write_activity_csv(act, a.space.names, a.activity);
  }
}

int cmd_posterior(const std::string& file, const ExperimentConfig& cfg) {
  const LoadedDesign input = read_design_csv(file);
  const PosteriorAnalysis a = analyze_posterior(input, cfg, cfg.with_block);
  print_posterior_table(a, cfg.top_k);
  write_posterior_reports(a, cfg, "model");
  return 0;
}

int cmd_followup(const std::string& file, const ExperimentConfig& cfg) {
  const LoadedDesign input = read_design_csv(file);
  const FollowupResult r = run_followup(input, cfg);
  std::printf("%s follow-up search: %d candidates, n*=%d, %d models%s\n",
              r.criterion.c_str(), r.candidate_count, r.n_star, r.models_used,
              r.exhaustive ? "" : " (greedy exchange, non-exhaustive)");
  if (r.saturated_excluded > 0)
    std::printf("note: %d saturated model(s) excluded from the divergence source side\n",
                r.saturated_excluded);
  std::printf("  %-5s %-20s %s\n", "rank", "runs", "score");
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    std::string runs;
    for (std::size_t j = 0; j < r.ranked[i].design.run_indices.size(); ++j) {
      if (j) runs += " ";
      runs += std::to_string(r.ranked[i].design.run_indices[j] + 1);
    }
    std::printf("  %-5zu %-20s %.4f\n", i + 1, runs.c_str(), r.ranked[i].value);
  }
  const std::string name =
      r.exhaustive ? r.criterion : r.criterion + "-exchange";
  if (cfg.format == "json") {
    auto out = open_report(cfg.out_dir, "followup_designs.json");
    write_designs_json(out, r.ranked, name, r.n_star, r.models_used);
  } else {
    auto out = open_report(cfg.out_dir, "followup_designs.csv");
    write_designs_csv(out, r.ranked, name, r.n_star, r.models_used);
  }
  return 0;
}

int cmd_combined(const std::string& screen_file, const std::string& follow_file,
                 const ExperimentConfig& cfg) {
  const CombinedResult r =
      run_combined(read_design_csv(screen_file), read_design_csv(follow_file), cfg);
  std::printf("Combined analysis (%d screening + %d follow-up runs)\n",
              r.screening.design.n(), r.combined.design.n() - r.screening.design.n());
  print_posterior_table(r.combined, cfg.top_k);
  std::printf("Shannon heterogeneity: %.2f -> %.2f\n", r.before.shannon_normalized,
              r.after.shannon_normalized);
  std::printf("Activity coefficient of variation: %.2f -> %.2f\n",
              r.before.cv_factors, r.after.cv_factors);
  write_posterior_reports(r.combined, cfg, "combined");
  return 0;
}

int cmd_diagnostics(const std::string& file, const std::string& follow_file,
                    bool robust_check, const ExperimentConfig& cfg) {
  const LoadedDesign input = read_design_csv(file);

  HeterogeneityReport before, after;
  bool have_after = false;
  if (!follow_file.empty()) {
    const CombinedResult r =
        run_combined(input, read_design_csv(follow_file), cfg);
    before = r.before;
    after = r.after;
    have_after = true;
  } else {
    before = analyze_posterior(input, cfg, cfg.with_block).heterogeneity();
  }

  std::ostringstream json;
  json << "{\n";
  json << "  \"shannon\": " << before.shannon_normalized << ",\n";
  json << "  \"cv\": " << before.cv_factors << ",\n";
  json << "  \"model_count\": " << before.model_count;
  if (have_after) {
    json << ",\n  \"combined_shannon\": " << after.shannon_normalized;
    json << ",\n  \"combined_cv\": " << after.cv_factors;
    json << ",\n  \"combined_model_count\": " << after.model_count;
  }

  const int k = static_cast<int>(input.factor_names.size());
  if (input.table.n() == (1 << k)) {
    const auto contrasts =
        factorial_contrasts(input.table, cfg.interaction_order);
    auto out = open_report(cfg.out_dir, "contrasts.csv");
    write_contrasts_csv(out, contrasts, input.factor_names);
    std::printf("wrote contrast plot data for %zu terms\n", contrasts.size());
  }

  if (robust_check) {
    const FactorSpace space = FactorSpace::make(2, 2);
    RobustReferenceOptions opts;
    opts.seed = cfg.seed;
    const auto check = robust_vs_reference_check(
        space, FactorModel::forced({0, 1}, 2), opts);
    json << ",\n  \"robust_reference_kl\": [";
    for (std::size_t i = 0; i < check.kl.size(); ++i)
      json << (i ? ", " : "") << check.kl[i];
    json << "],\n  \"robust_reference_trend_ok\": "
         << (check.trend_decreasing ? "true" : "false");
  }
  json << "\n}\n";

  auto out = open_report(cfg.out_dir, "diagnostics.json");
  out << json.str();
  std::printf("shannon %.2f  cv %.2f", before.shannon_normalized, before.cv_factors);
  if (have_after)
    std::printf("  ->  shannon %.2f  cv %.2f", after.shannon_normalized,
                after.cv_factors);
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Objective Bayes factor screening and follow-up design"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_file;
  std::string design_file, follow_file;
  bool robust_check = false;

  auto add_common = [&](CLI::App* sub, bool needs_design = true) {
    if (needs_design)
      sub->add_option("design", design_file, "design CSV file")->required();
    sub->add_option("--config", config_file, "key=value config file");
    sub->add_option("--order", cfg.interaction_order, "interaction order (2 or 3)");
    sub->add_option("--prior", cfg.prior_spec, "model-space prior: beta:a,b or pi:v");
    sub->add_option("--out", cfg.out_dir, "report output directory");
    sub->add_option("--format", cfg.format, "report format: csv or json");
    sub->add_option("--top-k", cfg.top_k, "rows in ranked outputs");
    sub->add_option("--prob-floor", cfg.prob_floor, "drop models below this posterior mass");
  };

  CLI::App* post = app.add_subcommand("posterior", "model and factor-activity posterior");
  add_common(post);
  post->add_flag("--block", cfg.with_block, "use the design's block column");

  CLI::App* follow = app.add_subcommand("followup", "optimal follow-up design search");
  add_common(follow);
  follow->add_option("--criterion", cfg.criterion, "omd or cmd");
  follow->add_option("--gamma", cfg.gamma, "conventional prior scale (cmd)");
  follow->add_option("--pi", cfg.pi, "conventional activity probability (cmd)");
  follow->add_option("--n-star", cfg.n_star, "number of follow-up runs");
  follow->add_flag("--exchange", cfg.exchange, "greedy exchange instead of exhaustive search");

  CLI::App* comb = app.add_subcommand("combined", "re-analysis of screening plus follow-up runs");
  add_common(comb);
  comb->add_option("followup", follow_file, "follow-up CSV file")->required();

  CLI::App* diag = app.add_subcommand("diagnostics", "heterogeneity and contrast reports");
  add_common(diag);
  diag->add_option("--followup", follow_file, "optional follow-up CSV for before/after deltas");
  diag->add_flag("--block", cfg.with_block, "use the design's block column");
  diag->add_flag("--robust-check", robust_check,
                 "run the robust-vs-reference predictive consistency check");
  diag->add_option("--seed", cfg.seed, "seed for the consistency check");

  // Config-file values act as defaults; flags given on the command line
  // override them, so the file is applied before parsing.
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc)
        apply_config_file(cfg, argv[i + 1]);
      else if (arg.rfind("--config=", 0) == 0)
        apply_config_file(cfg, arg.substr(9));
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    cfg.validate();

    if (post->parsed()) return cmd_posterior(design_file, cfg);
    if (follow->parsed()) return cmd_followup(design_file, cfg);
    if (comb->parsed()) return cmd_combined(design_file, follow_file, cfg);
    if (diag->parsed()) return cmd_diagnostics(design_file, follow_file, robust_check, cfg);
    return kExitValidation;
  } catch (const DesignSpaceOverflow& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOverflow;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
