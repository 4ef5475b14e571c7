#pragma once

#include <Eigen/Dense>
#include <vector>

#include "obayes/factorial.hpp"
#include "obayes/posterior.hpp"

namespace obayes {

struct PredictiveSummary {
  Eigen::VectorXd y_hat_star;  ///< n* predictive means
  Eigen::MatrixXd v_star;      ///< n* x n* scale matrix, I + Z* (Z'Z)^{-1} Z*'
  double sse = 0.0;
  int df = 0;
};

/// Posterior-predictive mean and scale for follow-up rows z_star, built
/// from a fitted model: y_hat* = Z* gamma_hat, V* = I + Z* (Z'Z)^{-1} Z*'.
PredictiveSummary predictive_summary(const OlsSummary& ols,
                                     const Eigen::MatrixXd& z_star);

/// KL divergence between two multivariate Gaussians:
/// 1/2 [ tr(S1^{-1} S0) + (m1-m0)' S1^{-1} (m1-m0) + log |S1|/|S0| - s ].
double kl_gaussian(const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                   const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1);

/// KL divergence between the posterior predictives of two models for the
/// same follow-up runs; the expectation over sigma^2 replaces 1/sigma^2
/// by df_i / SSE_i.
double kl_predictive(const PredictiveSummary& pred_i,
                     const PredictiveSummary& pred_j);

struct CriterionScore {
  CandidateDesign design;
  double value = 0.0;  ///< nats
};

struct SearchOptions {
  int n_star = 4;
  int top_k = 5;
  bool exchange = false;  ///< greedy exchange heuristic instead of exhaustion
  unsigned threads = 0;   ///< 0 = auto; OBAYES_THREADS caps in either case
};

/// Precomputed scoring state for the model-discrimination criterion over
/// a fixed candidate-run table. The same machinery scores both the
/// objective (reference-predictive, robust-posterior weights) and the
/// conventional variant; they differ only in the per-model inputs.
class ModelDiscrimination {
 public:
  /// Objective criterion: weights from the robust posterior, predictive
  /// pieces from the reference-prior fits.
  static ModelDiscrimination objective(const std::vector<EnumeratedModel>& models,
                                       const std::vector<OlsSummary>& fits,
                                       const ModelPosterior& post,
                                       const Eigen::MatrixXd& candidates,
                                       double prob_floor = 0.0);

  /// Conventional criterion: weights from the conventional posterior,
  /// predictive pieces from the conjugate ridge fits.
  static ModelDiscrimination conventional(const std::vector<EnumeratedModel>& models,
                                          const std::vector<ConventionalFit>& fits,
                                          const ModelPosterior& post,
                                          const Eigen::MatrixXd& candidates,
                                          double prob_floor = 0.0);

  /// Criterion value of one design (sorted multiset of candidate rows):
  ///
  ///   sum_{i != j} w_i w_j 1/2 [ tr(V_j*^{-1} V_i*)
  ///       + prec_i (yhat_i* - yhat_j*)' V_j*^{-1} (yhat_i* - yhat_j*) - n* ]
  ///
  /// The pairwise log-determinant terms cancel over the symmetric sum and
  /// are omitted.
  double score(const std::vector<int>& run_rows) const;

  CriterionScore score_design(std::vector<int> run_rows) const;

  /// Ranked top-k designs. Exhaustive by default (throws
  /// DesignSpaceOverflow if the multiset count exceeds 64 bits); the
  /// exchange option switches to the greedy heuristic and returns the
  /// single design it settles on.
  std::vector<CriterionScore> search(const SearchOptions& options) const;

  int candidate_count() const { return candidate_count_; }
  int models_used() const { return static_cast<int>(models_.size()); }
  int saturated_excluded() const { return saturated_excluded_; }

 private:
  struct PreparedModel {
    Eigen::MatrixXd cand_rows;  ///< c x p term matrix at the candidates
    Eigen::MatrixXd gram_inv;   ///< p x p
    Eigen::MatrixXd pred_cov;   ///< c x c cached when small enough
    Eigen::VectorXd pred_mean;  ///< c
    double weight = 0.0;
    double precision = -1.0;  ///< E[1/sigma^2]; < 0 marks a saturated model
  };

  struct Workspace;

  double score_with(const std::vector<int>& rows, Workspace& ws) const;
  CriterionScore exchange_search(const SearchOptions& options) const;

  std::vector<PreparedModel> models_;
  int candidate_count_ = 0;
  int n_ = 0;
  int saturated_excluded_ = 0;
};

/// Builds the candidate-side matrix [1 | model terms] for one model; rows
/// follow the candidate table.
Eigen::MatrixXd candidate_model_matrix(const Eigen::MatrixXd& candidates,
                                       const FactorModel& model);

}  // namespace obayes
