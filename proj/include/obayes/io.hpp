#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "obayes/diagnostics.hpp"
#include "obayes/discrimination.hpp"
#include "obayes/factorial.hpp"
#include "obayes/posterior.hpp"

namespace obayes {

struct LoadedDesign {
  DesignTable table;
  std::vector<std::string> factor_names;
};

/// Reads a design CSV: header of factor names plus a required `y` column
/// and an optional `block` column; factor cells in {-1, +1, -, +}.
/// ValidationError messages carry line and column diagnostics.
LoadedDesign read_design_csv(const std::string& path);
LoadedDesign parse_design_csv(std::istream& in, const std::string& origin);

struct ExperimentConfig {
  int interaction_order = 2;
  std::string prior_spec = "beta:1,1";  ///< "beta:a,b" or "pi:v"
  std::string criterion = "omd";        ///< "omd" or "cmd"
  double gamma = 2.0;                   ///< conventional prior scale
  double pi = 0.25;                     ///< conventional activity probability
  int n_star = 4;
  int top_k = 5;
  double prob_floor = 0.0;
  bool with_block = false;
  bool exchange = false;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string format = "csv";  ///< "csv" or "json"

  void validate() const;
  ModelSpacePrior objective_prior(int k) const;
};

/// Flat key=value configuration file ('#' comments); unknown keys are
/// rejected. CLI flags override file values, so callers apply this first.
void apply_config_file(ExperimentConfig& config, const std::string& path);

// --- report emission ---------------------------------------------------
// Probabilities print with two decimals and criterion scores with four;
// run numbering is 1-based into the full-factorial candidate table.

void write_posterior_csv(std::ostream& out,
                         const std::vector<EnumeratedModel>& models,
                         const ModelPosterior& post,
                         const std::vector<std::string>& names);

void write_posterior_json(std::ostream& out,
                          const std::vector<EnumeratedModel>& models,
                          const ModelPosterior& post,
                          const std::vector<std::string>& names);

void write_activity_csv(std::ostream& out, const std::vector<std::string>& names,
                        const std::vector<double>& activity);

void write_activity_json(std::ostream& out, const std::vector<std::string>& names,
                         const std::vector<double>& activity);

void write_designs_csv(std::ostream& out, const std::vector<CriterionScore>& ranked,
                       const std::string& criterion, int n_star, int models_used);

void write_designs_json(std::ostream& out, const std::vector<CriterionScore>& ranked,
                        const std::string& criterion, int n_star, int models_used);

void write_candidate_csv(std::ostream& out, const Eigen::MatrixXd& table,
                         const std::vector<std::string>& names);

void write_contrasts_csv(std::ostream& out, const std::vector<ContrastEntry>& contrasts,
                         const std::vector<std::string>& names);

std::string term_label(const Term& term, const std::vector<std::string>& names);

}  // namespace obayes
