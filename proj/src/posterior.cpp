#include "obayes/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "obayes/errors.hpp"
#include "obayes/specfun.hpp"

namespace obayes {

namespace {
constexpr double kSaturationQ = 1e-12;
}

ModelSpacePrior ModelSpacePrior::beta_binomial(double a, double b, int k) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ValidationError("beta-binomial prior needs a, b > 0");
  ModelSpacePrior p;
  p.kind = Kind::beta_binomial;
  p.a = a;
  p.b = b;
  p.k = k;
  return p;
}

ModelSpacePrior ModelSpacePrior::fixed_pi(double pi, int k) {
  if (!(pi > 0.0) || !(pi < 1.0))
    throw ValidationError("fixed activity probability must lie in (0, 1)");
  ModelSpacePrior p;
  p.kind = Kind::fixed_pi;
  p.pi = pi;
  p.k = k;
  return p;
}

OlsSummary fit_ols(const ModelMatrix& mm, const Eigen::VectorXd& y) {
  if (!mm.rank_ok)
    throw NumericalError("fit_ols requires a full-rank model matrix");
  const Eigen::MatrixXd z = mm.full();
  if (z.rows() != y.size())
    throw ValidationError("response length does not match model matrix");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  OlsSummary s;
  s.gamma_hat = qr.solve(y);
  const Eigen::VectorXd resid = y - z * s.gamma_hat;
  s.sse = resid.squaredNorm();
  s.df = mm.df;

  // (Z'Z)^{-1} = P R^{-1} R^{-T} P' from the pivoted factorization.
  const int p = static_cast<int>(z.cols());
  const Eigen::MatrixXd r =
      qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  s.gram_inv = qr.colsPermutation() * (rinv * rinv.transpose()) *
               qr.colsPermutation().transpose();
  return s;
}

double prior_odds(const FactorModel& model, const ModelSpacePrior& prior) {
  const int f = model.f();
  if (f > prior.k) throw ValidationError("model has more active factors than k");
  if (prior.kind == ModelSpacePrior::Kind::fixed_pi)
    return std::pow(prior.pi / (1.0 - prior.pi), f);
  using specfun::log_beta;
  return std::exp(log_beta(prior.a + f, prior.b + prior.k - f) -
                  log_beta(prior.a, prior.b + prior.k));
}

RobustLogBF robust_log_bf(const OlsSummary& ols_i, const OlsSummary& ols_0,
                          int t_i, int t0, int n) {
  RobustLogBF out;
  if (t_i == 0) return out;
  if (!(ols_0.sse > 0.0))
    throw NumericalError(
        "null-model SSE is zero: responses carry no variation to analyze");
  if (n <= t_i + t0)
    throw ValidationError("robust Bayes factor needs n > t_i + t0");

  double q = ols_i.sse / ols_0.sse;
  if (q < kSaturationQ) {
    out.saturated = true;
    q = kSaturationQ;
  }
  out.q = q;

  const double tt = static_cast<double>(t_i + t0);
  const double z = (1.0 - 1.0 / q) * tt / (n + 1.0);
  const double log_f = specfun::log_hyp2f1(
      {0.5 * (t_i + 1), 0.5 * (n - t0), 0.5 * (t_i + 3), z});
  out.value = -0.5 * t_i * std::log((n + 1.0) / tt) -
              0.5 * (n - t0) * std::log(q) - std::log(t_i + 1.0) + log_f;
  return out;
}

namespace {

ModelPosterior normalize_from_log_weights(std::vector<ModelPosterior::Entry> entries,
                                          const std::vector<double>& log_weight) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weight) max_lw = std::max(max_lw, lw);
  double total = 0.0;
  std::vector<double> w(log_weight.size());
  for (std::size_t i = 0; i < log_weight.size(); ++i) {
    w[i] = std::exp(log_weight[i] - max_lw);
    total += w[i];
  }
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].prob = w[i] / total;
  ModelPosterior post;
  post.entries = std::move(entries);
  return post;
}

}  // namespace

ModelPosterior model_posterior(const std::vector<EnumeratedModel>& models,
                               const std::vector<OlsSummary>& fits,
                               const ModelSpacePrior& prior) {
  if (models.empty()) throw ValidationError("empty model space");
  if (models.size() != fits.size())
    throw ValidationError("model and fit lists differ in length");
  if (!models.front().model.active.empty())
    throw ValidationError("admissible model space must start with the null model");

  const OlsSummary& null_fit = fits.front();
  const int n = static_cast<int>(models.front().matrix.x0.rows());
  std::vector<ModelPosterior::Entry> entries(models.size());
  std::vector<double> lw(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& em = models[i];
    const RobustLogBF bf =
        robust_log_bf(fits[i], null_fit, em.model.t(), em.matrix.t0(), n);
    entries[i].log_bf = bf.value;
    entries[i].q = bf.q;
    entries[i].saturated = bf.saturated;
    entries[i].prior_odds = prior_odds(em.model, prior);
    lw[i] = bf.value + std::log(entries[i].prior_odds);
  }
  return normalize_from_log_weights(std::move(entries), lw);
}

std::vector<double> factor_activity(const ModelPosterior& post,
                                    const std::vector<EnumeratedModel>& models,
                                    int k) {
  if (post.entries.size() != models.size())
    throw ValidationError("posterior and model list differ in length");
  std::vector<double> activity(k, 0.0);
  for (std::size_t i = 0; i < models.size(); ++i)
    for (int f : models[i].model.active) activity.at(f) += post.entries[i].prob;
  return activity;
}

namespace {

ConventionalFit conventional_core(const ModelMatrix& mm, const Eigen::VectorXd& y,
                                  double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("conventional prior scale must be > 0");
  const Eigen::MatrixXd w = mm.full();
  const int n = static_cast<int>(w.rows());
  const int p = static_cast<int>(w.cols());
  const int t0 = mm.t0();
  const int t = mm.t();

  Eigen::MatrixXd a = w.transpose() * w;
  for (int j = t0; j < p; ++j) a(j, j) += 1.0 / (gamma * gamma);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("conventional marginal: W'W + D not positive definite");

  ConventionalFit fit;
  const Eigen::VectorXd wty = w.transpose() * y;
  fit.coef = ldlt.solve(wty);
  fit.ridge_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.s_tilde = y.squaredNorm() - wty.dot(fit.coef);
  fit.df = n - t0;
  if (!(fit.s_tilde > 0.0))
    throw NumericalError("conventional marginal: shrunk SSE is not positive");

  const double half = 0.5 * (n - t0);
  double log_det = 0.0;
  for (int j = 0; j < p; ++j) log_det += std::log(ldlt.vectorD()(j));
  fit.log_ml = -half * std::log(2.0 * M_PI) - t * std::log(gamma) -
               0.5 * log_det + specfun::log_gamma(half) +
               (half - 1.0) * std::log(2.0) - half * std::log(fit.s_tilde);
  return fit;
}

}  // namespace

double conventional_log_ml(const ModelMatrix& mm, const Eigen::VectorXd& y,
                           double gamma) {
  return conventional_core(mm, y, gamma).log_ml;
}

ConventionalFit fit_conventional(const ModelMatrix& mm, const Eigen::VectorXd& y,
                                 double gamma) {
  return conventional_core(mm, y, gamma);
}

ModelPosterior conventional_posterior(const std::vector<EnumeratedModel>& models,
                                      const std::vector<ConventionalFit>& fits,
                                      const ModelSpacePrior& prior) {
  if (models.empty()) throw ValidationError("empty model space");
  if (models.size() != fits.size())
    throw ValidationError("model and fit lists differ in length");
  if (!models.front().model.active.empty())
    throw ValidationError("admissible model space must start with the null model");

  std::vector<ModelPosterior::Entry> entries(models.size());
  std::vector<double> lw(models.size());
  const double null_log_ml = fits.front().log_ml;
  for (std::size_t i = 0; i < models.size(); ++i) {
    entries[i].log_bf = fits[i].log_ml - null_log_ml;
    entries[i].prior_odds = prior_odds(models[i].model, prior);
    entries[i].q = fits[i].s_tilde / fits.front().s_tilde;
    lw[i] = entries[i].log_bf + std::log(entries[i].prior_odds);
  }
  return normalize_from_log_weights(std::move(entries), lw);
}

double robust_g_density(double g, int n, int t_i, int t0) {
  const double ratio = (1.0 + n) / static_cast<double>(t_i + t0);
  if (g <= ratio - 1.0) return 0.0;
  return 0.5 * std::sqrt(ratio) * std::pow(g + 1.0, -1.5);
}

}  // namespace obayes
