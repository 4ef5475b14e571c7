#pragma once

#include <Eigen/Dense>
#include <vector>

#include "obayes/factorial.hpp"

namespace obayes {

struct ModelSpacePrior {
  enum class Kind { beta_binomial, fixed_pi };

  Kind kind = Kind::beta_binomial;
  double a = 1.0;
  double b = 1.0;
  double pi = 0.25;
  int k = 0;

  static ModelSpacePrior beta_binomial(double a, double b, int k);
  static ModelSpacePrior fixed_pi(double pi, int k);
};

struct OlsSummary {
  Eigen::VectorXd gamma_hat;  ///< t0 + t coefficient estimates
  Eigen::MatrixXd gram_inv;   ///< (Z'Z)^{-1}, Z = [X0 Xi]
  double sse = 0.0;
  int df = 0;  ///< n - t0 - t
};

/// Least squares through a column-pivoted QR factorization.
/// Requires mm.rank_ok.
OlsSummary fit_ols(const ModelMatrix& mm, const Eigen::VectorXd& y);

/// Prior odds P(M)/P(M0). Beta-binomial: B(a+f, b+k-f) / B(a, b+k);
/// fixed pi: (pi/(1-pi))^f.
double prior_odds(const FactorModel& model, const ModelSpacePrior& prior);

struct RobustLogBF {
  double value = 0.0;
  double q = 1.0;          ///< SSE_i / SSE_0 (after capping, if applied)
  bool saturated = false;  ///< SSE_i ~ 0; q capped at 1e-12 by convention
};

/// Log Bayes factor of a model against the null under the robust
/// hierarchical g-prior:
///
///   log BF = -(t_i/2) log((n+1)/(t_i+t0)) - ((n-t0)/2) log Q - log(t_i+1)
///            + log 2F1((t_i+1)/2, (n-t0)/2; (t_i+3)/2; (1-Q^{-1})(t_i+t0)/(n+1))
///
/// with Q = SSE_i/SSE_0. Returns 0 for the null model (t_i = 0).
/// Throws NumericalError when SSE_0 = 0 (degenerate data).
RobustLogBF robust_log_bf(const OlsSummary& ols_i, const OlsSummary& ols_0,
                          int t_i, int t0, int n);

struct ModelPosterior {
  struct Entry {
    double log_bf = 0.0;      ///< log evidence ratio vs the null model
    double prior_odds = 1.0;  ///< P(M)/P(M0)
    double prob = 0.0;        ///< P(M | y), normalized over the admissible space
    double q = 1.0;           ///< SSE ratio diagnostic (robust path only)
    bool saturated = false;
  };
  std::vector<Entry> entries;  ///< aligned with the enumerated model list
};

/// Posterior over the admissible model space under the robust g-prior.
/// Computed in log space with max-subtraction; probabilities sum to one.
ModelPosterior model_posterior(const std::vector<EnumeratedModel>& models,
                               const std::vector<OlsSummary>& fits,
                               const ModelSpacePrior& prior);

/// Per-factor activity probabilities: sum of P(M|y) over models whose
/// active set contains the factor.
std::vector<double> factor_activity(const ModelPosterior& post,
                                    const std::vector<EnumeratedModel>& models,
                                    int k);

struct ConventionalFit {
  Eigen::VectorXd coef;       ///< posterior mean of (beta0, beta_i)
  Eigen::MatrixXd ridge_inv;  ///< (W'W + D)^{-1}, D = diag(0_{t0}, gamma^{-2} I_t)
  double s_tilde = 0.0;       ///< shrunk residual sum of squares
  int df = 0;                 ///< n - t0
  double log_ml = 0.0;
};

/// Closed-form marginal likelihood under the conventional prior
/// p(beta0, sigma) ~ 1/sigma and beta_i | sigma ~ N(0, gamma^2 sigma^2 I):
///
///   log m = -((n-t0)/2) log(2 pi) - t log(gamma) - 1/2 log|W'W + D|
///           + log Gamma((n-t0)/2) + ((n-t0)/2 - 1) log 2
///           - ((n-t0)/2) log(s_tilde)
///
/// with W = [X0 Xi] and s_tilde = y'y - y'W (W'W+D)^{-1} W'y.
double conventional_log_ml(const ModelMatrix& mm, const Eigen::VectorXd& y,
                           double gamma);

ConventionalFit fit_conventional(const ModelMatrix& mm, const Eigen::VectorXd& y,
                                 double gamma);

/// Posterior over the model space from conventional marginal likelihoods
/// (the fixed-pi prior is the customary pairing).
ModelPosterior conventional_posterior(const std::vector<EnumeratedModel>& models,
                                      const std::vector<ConventionalFit>& fits,
                                      const ModelSpacePrior& prior);

/// Density p^R(g | M) of the robust prior's mixing variable:
/// (1/2) sqrt((1+n)/(t_i+t0)) (g+1)^{-3/2} on ((1+n)/(t_i+t0) - 1, inf).
double robust_g_density(double g, int n, int t_i, int t0);

}  // namespace obayes
