#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace obayes {

/// A model term: 1-3 strictly increasing factor indices (main effect,
/// two-factor or three-factor interaction).
using Term = std::vector<int>;

/// Canonical forced term list of an active set: main effects by factor
/// index, then pairs in lexicographic order, then (order 3) triples.
std::vector<Term> forced_terms(const std::vector<int>& active, int interaction_order);

/// Elementwise product of the coded run columns named by the term.
Eigen::VectorXd term_column(const Eigen::MatrixXd& coded_runs, const Term& term);

struct FactorSpace {
  int k = 0;
  std::vector<std::string> names;
  int interaction_order = 2;

  static FactorSpace make(int k, int interaction_order);
  static FactorSpace make(std::vector<std::string> names, int interaction_order);

  /// Throws ValidationError if 1 <= k <= 16, order in {2,3} or name
  /// uniqueness is violated.
  void validate() const;
};

struct DesignTable {
  Eigen::MatrixXd runs;            ///< n x k, entries in {-1, +1}
  Eigen::VectorXd y;               ///< n responses
  std::vector<std::string> block;  ///< empty, or n labels with two distinct values

  int n() const { return static_cast<int>(runs.rows()); }
  int k() const { return static_cast<int>(runs.cols()); }
  bool has_block() const { return !block.empty(); }

  /// Block labels coded -1/+1 in order of first appearance.
  Eigen::VectorXd block_column() const;

  void validate() const;
};

struct FactorModel {
  std::vector<int> active;  ///< sorted factor indices
  std::vector<Term> terms;  ///< canonical order; empty for the null model

  int f() const { return static_cast<int>(active.size()); }
  int t() const { return static_cast<int>(terms.size()); }

  /// "null" or comma-joined factor names, e.g. "B,D,E".
  std::string label(const std::vector<std::string>& names) const;

  /// Model with the full forced term set for the active factors.
  static FactorModel forced(std::vector<int> active, int interaction_order);
};

struct ModelMatrix {
  Eigen::MatrixXd x0;  ///< n x t0 common columns (intercept, optional block)
  Eigen::MatrixXd xi;  ///< n x t model-term columns in canonical order
  bool rank_ok = false;
  int df = 0;  ///< n - t0 - t

  int t0() const { return static_cast<int>(x0.cols()); }
  int t() const { return static_cast<int>(xi.cols()); }
  Eigen::MatrixXd full() const;
};

/// Builds [X0 | Xi] for the model's term list exactly as given.
/// rank_ok is true iff the combined matrix has full column rank
/// (singular values above 1e-10 relative to the largest) and df >= 1.
ModelMatrix build_model_matrix(const DesignTable& design, const FactorModel& model,
                               bool with_block);

struct EnumeratedModel {
  FactorModel model;
  ModelMatrix matrix;
  int absorbed_terms = 0;  ///< forced interactions absorbed by aliasing
};

struct EnumerationSummary {
  std::uint64_t total_subsets = 0;
  int admissible = 0;
  int dropped_insufficient_df = 0;  ///< n <= t0 + t_forced
  int dropped_aliasing = 0;         ///< confounded mains/common columns or rank loss
  int models_with_absorbed_terms = 0;
};

/// Enumerates the admissible model space over all 2^k active subsets in
/// (f, lexicographic) order; the null model is always first.
///
/// Admissibility follows the estimability rules of the fractional
/// setting: a model must leave at least one residual degree of freedom
/// for its full forced term set; an interaction column confounded with
/// the common columns (or a duplicated main-effect column) makes the
/// model inadmissible; an interaction column absorbed by the model's own
/// earlier columns is dropped from the term list; any remaining rank
/// deficiency drops the model.
std::vector<EnumeratedModel> enumerate_models(const FactorSpace& space,
                                              const DesignTable& design,
                                              bool with_block,
                                              EnumerationSummary* summary = nullptr);

/// Full 2^k candidate-run table in standard order: run r (1-based) has
/// factor j at level +1 iff bit (j-1) of r-1 is set, so the first factor
/// alternates fastest (run 2 flips the first factor).
Eigen::MatrixXd enumerate_candidate_runs(const FactorSpace& space);

struct CandidateDesign {
  std::vector<int> run_indices;  ///< sorted, 0-based into the candidate table
  double score = 0.0;
};

/// C(c + n_star - 1, n_star); throws DesignSpaceOverflow if the count
/// does not fit in 64 bits.
std::uint64_t count_followup_designs(std::uint64_t candidates, std::uint64_t n_star);

/// Streams every size-n_star multiset of candidate indices exactly once,
/// in lexicographic order of the sorted tuple.
class FollowupDesignEnumerator {
 public:
  FollowupDesignEnumerator(int candidate_count, int n_star);

  /// Advances to the next design; returns false when exhausted.
  bool next(std::vector<int>& indices);

  /// Repositions the stream so the next call to next() yields the design
  /// of the given lexicographic rank.
  void seek(std::uint64_t rank);

  std::uint64_t total() const { return total_; }

 private:
  int c_;
  int n_star_;
  std::uint64_t total_;
  std::uint64_t emitted_ = 0;
  std::vector<int> current_;
  bool started_ = false;
};

}  // namespace obayes
