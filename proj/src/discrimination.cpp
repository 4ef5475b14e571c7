#include "obayes/discrimination.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "obayes/errors.hpp"

namespace obayes {

namespace {

// Candidate-covariance cache limit; beyond this the per-design products
// are formed on the fly.
constexpr int kCovCacheLimit = 512;

unsigned resolve_thread_count(unsigned requested, std::uint64_t work_items) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("OBAYES_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  if (work_items < n) n = static_cast<unsigned>(std::max<std::uint64_t>(1, work_items));
  return n;
}

bool design_less(const CriterionScore& a, const CriterionScore& b) {
  if (a.value != b.value) return a.value > b.value;
  return a.design.run_indices < b.design.run_indices;
}

}  // namespace

PredictiveSummary predictive_summary(const OlsSummary& ols,
                                     const Eigen::MatrixXd& z_star) {
  if (z_star.cols() != ols.gamma_hat.size())
    throw ValidationError("z_star column count does not match fitted coefficients");
  PredictiveSummary p;
  p.y_hat_star = z_star * ols.gamma_hat;
  p.v_star = Eigen::MatrixXd::Identity(z_star.rows(), z_star.rows()) +
             z_star * ols.gram_inv * z_star.transpose();
  p.sse = ols.sse;
  p.df = ols.df;
  return p;
}

double kl_gaussian(const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                   const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1) {
  const int s = static_cast<int>(mu0.size());
  if (mu1.size() != s || sigma0.rows() != s || sigma1.rows() != s ||
      sigma0.cols() != s || sigma1.cols() != s)
    throw ValidationError("kl_gaussian: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt0(sigma0), llt1(sigma1);
  if (llt0.info() != Eigen::Success || llt1.info() != Eigen::Success)
    throw NumericalError("kl_gaussian: covariance not positive definite");

  const double trace = llt1.solve(sigma0).trace();
  const Eigen::VectorXd d = mu1 - mu0;
  const double quad = d.dot(llt1.solve(d));
  double log_det0 = 0.0, log_det1 = 0.0;
  for (int i = 0; i < s; ++i) {
    log_det0 += 2.0 * std::log(llt0.matrixL()(i, i));
    log_det1 += 2.0 * std::log(llt1.matrixL()(i, i));
  }
  return 0.5 * (trace + quad + log_det1 - log_det0 - s);
}

double kl_predictive(const PredictiveSummary& pred_i,
                     const PredictiveSummary& pred_j) {
  const int s = static_cast<int>(pred_i.y_hat_star.size());
  if (pred_j.y_hat_star.size() != s)
    throw ValidationError("kl_predictive: follow-up sizes differ");
  if (!(pred_i.sse > 0.0))
    throw NumericalError(
        "kl_predictive: saturated model (SSE = 0) has no predictive scale");
  Eigen::LLT<Eigen::MatrixXd> llt_i(pred_i.v_star), llt_j(pred_j.v_star);
  if (llt_i.info() != Eigen::Success || llt_j.info() != Eigen::Success)
    throw NumericalError("kl_predictive: scale matrix not positive definite");
  const double trace = llt_j.solve(pred_i.v_star).trace();
  const Eigen::VectorXd d = pred_i.y_hat_star - pred_j.y_hat_star;
  const double quad = d.dot(llt_j.solve(d));
  double log_det_i = 0.0, log_det_j = 0.0;
  for (int r = 0; r < s; ++r) {
    log_det_i += 2.0 * std::log(llt_i.matrixL()(r, r));
    log_det_j += 2.0 * std::log(llt_j.matrixL()(r, r));
  }
  const double precision = static_cast<double>(pred_i.df) / pred_i.sse;
  return 0.5 * (trace + precision * quad + log_det_j - log_det_i - s);
}

Eigen::MatrixXd candidate_model_matrix(const Eigen::MatrixXd& candidates,
                                       const FactorModel& model) {
  Eigen::MatrixXd z(candidates.rows(), 1 + model.t());
  z.col(0) = Eigen::VectorXd::Ones(candidates.rows());
  for (int j = 0; j < model.t(); ++j)
    z.col(1 + j) = term_column(candidates, model.terms[j]);
  return z;
}

struct ModelDiscrimination::Workspace {
  std::vector<Eigen::MatrixXd> v;     // per model: n* x n*
  std::vector<Eigen::MatrixXd> vinv;  // per model: n* x n*
  std::vector<Eigen::VectorXd> mu;    // per model: n*
  Eigen::MatrixXd z;                  // n* x p scratch
  Eigen::LLT<Eigen::MatrixXd> llt;

  Workspace(std::size_t m, int n_star)
      : v(m, Eigen::MatrixXd(n_star, n_star)),
        vinv(m, Eigen::MatrixXd(n_star, n_star)),
        mu(m, Eigen::VectorXd(n_star)) {}
};

ModelDiscrimination ModelDiscrimination::objective(
    const std::vector<EnumeratedModel>& models, const std::vector<OlsSummary>& fits,
    const ModelPosterior& post, const Eigen::MatrixXd& candidates,
    double prob_floor) {
  if (models.size() != fits.size() || models.size() != post.entries.size())
    throw ValidationError("model, fit and posterior lists differ in length");
  ModelDiscrimination d;
  d.candidate_count_ = static_cast<int>(candidates.rows());
  double weight_total = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (post.entries[i].prob < prob_floor) continue;
    PreparedModel pm;
    pm.cand_rows = candidate_model_matrix(candidates, models[i].model);
    pm.gram_inv = fits[i].gram_inv;
    pm.pred_mean = pm.cand_rows * fits[i].gamma_hat;
    if (d.candidate_count_ <= kCovCacheLimit)
      pm.pred_cov = pm.cand_rows * fits[i].gram_inv * pm.cand_rows.transpose();
    pm.weight = post.entries[i].prob;
    if (post.entries[i].saturated || !(fits[i].sse > 0.0)) {
      pm.precision = -1.0;
      ++d.saturated_excluded_;
    } else {
      pm.precision = static_cast<double>(fits[i].df) / fits[i].sse;
    }
    weight_total += pm.weight;
    d.models_.push_back(std::move(pm));
  }
  if (d.models_.empty())
    throw ValidationError("no model reaches the posterior probability floor");
  for (auto& pm : d.models_) pm.weight /= weight_total;
  return d;
}

ModelDiscrimination ModelDiscrimination::conventional(
    const std::vector<EnumeratedModel>& models,
    const std::vector<ConventionalFit>& fits, const ModelPosterior& post,
    const Eigen::MatrixXd& candidates, double prob_floor) {
  if (models.size() != fits.size() || models.size() != post.entries.size())
    throw ValidationError("model, fit and posterior lists differ in length");
  ModelDiscrimination d;
  d.candidate_count_ = static_cast<int>(candidates.rows());
  double weight_total = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (post.entries[i].prob < prob_floor) continue;
    PreparedModel pm;
    pm.cand_rows = candidate_model_matrix(candidates, models[i].model);
    pm.gram_inv = fits[i].ridge_inv;
    pm.pred_mean = pm.cand_rows * fits[i].coef;
    if (d.candidate_count_ <= kCovCacheLimit)
      pm.pred_cov = pm.cand_rows * fits[i].ridge_inv * pm.cand_rows.transpose();
    pm.weight = post.entries[i].prob;
    pm.precision = static_cast<double>(fits[i].df) / fits[i].s_tilde;
    weight_total += pm.weight;
    d.models_.push_back(std::move(pm));
  }
  if (d.models_.empty())
    throw ValidationError("no model reaches the posterior probability floor");
  for (auto& pm : d.models_) pm.weight /= weight_total;
  return d;
}

double ModelDiscrimination::score_with(const std::vector<int>& rows,
                                       Workspace& ws) const {
  const int s = static_cast<int>(rows.size());
  const std::size_t m = models_.size();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(s, s);

  for (std::size_t mi = 0; mi < m; ++mi) {
    const PreparedModel& pm = models_[mi];
    auto& v = ws.v[mi];
    auto& mu = ws.mu[mi];
    if (pm.pred_cov.size() > 0) {
      for (int a = 0; a < s; ++a) {
        mu[a] = pm.pred_mean[rows[a]];
        for (int b = 0; b < s; ++b) v(a, b) = pm.pred_cov(rows[a], rows[b]);
        v(a, a) += 1.0;
      }
    } else {
      const int p = static_cast<int>(pm.cand_rows.cols());
      ws.z.resize(s, p);
      for (int a = 0; a < s; ++a) {
        ws.z.row(a) = pm.cand_rows.row(rows[a]);
        mu[a] = pm.pred_mean[rows[a]];
      }
      v.noalias() = ws.z * pm.gram_inv * ws.z.transpose();
      v += eye;
    }
    ws.llt.compute(v);
    ws.vinv[mi] = ws.llt.solve(eye);
  }

  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double wj = models_[j].weight;
    if (wj == 0.0) continue;
    const auto& vinv_j = ws.vinv[j];
    for (std::size_t i = 0; i < m; ++i) {
      if (i == j) continue;
      const PreparedModel& pi = models_[i];
      if (pi.weight == 0.0 || pi.precision < 0.0) continue;
      const double trace = (vinv_j.array() * ws.v[i].array()).sum();
      const Eigen::VectorXd d = ws.mu[i] - ws.mu[j];
      const double quad = d.dot(vinv_j * d);
      total += pi.weight * wj * 0.5 * (trace + pi.precision * quad - s);
    }
  }
  return total;
}

double ModelDiscrimination::score(const std::vector<int>& run_rows) const {
  for (int r : run_rows)
    if (r < 0 || r >= candidate_count_)
      throw ValidationError("design run index out of candidate range");
  Workspace ws(models_.size(), static_cast<int>(run_rows.size()));
  std::vector<int> sorted = run_rows;
  std::sort(sorted.begin(), sorted.end());
  return score_with(sorted, ws);
}

CriterionScore ModelDiscrimination::score_design(std::vector<int> run_rows) const {
  std::sort(run_rows.begin(), run_rows.end());
  CriterionScore cs;
  cs.value = score(run_rows);
  cs.design.run_indices = std::move(run_rows);
  cs.design.score = cs.value;
  return cs;
}

std::vector<CriterionScore> ModelDiscrimination::search(
    const SearchOptions& options) const {
  if (options.n_star < 1) throw ValidationError("n_star must be at least 1");
  if (options.top_k < 1) throw ValidationError("top_k must be at least 1");
  if (options.exchange) return {exchange_search(options)};

  const std::uint64_t total =
      count_followup_designs(candidate_count_, options.n_star);
  const unsigned workers = resolve_thread_count(options.threads, total);
  const std::uint64_t chunk = (total + workers - 1) / workers;

  std::vector<std::vector<CriterionScore>> per_worker(workers);
  auto run_range = [&](unsigned w) {
    const std::uint64_t begin = w * chunk;
    const std::uint64_t end = std::min<std::uint64_t>(begin + chunk, total);
    if (begin >= end) return;
    FollowupDesignEnumerator en(candidate_count_, options.n_star);
    en.seek(begin);
    Workspace ws(models_.size(), options.n_star);
    std::vector<int> rows;
    auto& best = per_worker[w];
    const std::size_t keep = static_cast<std::size_t>(options.top_k);
    for (std::uint64_t r = begin; r < end; ++r) {
      if (!en.next(rows)) break;
      CriterionScore cs;
      cs.value = score_with(rows, ws);
      if (best.size() == keep && !design_less(cs, best.back())) continue;
      cs.design.run_indices = rows;
      cs.design.score = cs.value;
      best.insert(std::upper_bound(best.begin(), best.end(), cs, design_less),
                  std::move(cs));
      if (best.size() > keep) best.pop_back();
    }
  };

  if (workers == 1) {
    run_range(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_range, w);
    for (auto& th : pool) th.join();
  }

  std::vector<CriterionScore> merged;
  for (auto& b : per_worker)
    merged.insert(merged.end(), std::make_move_iterator(b.begin()),
                  std::make_move_iterator(b.end()));
  std::sort(merged.begin(), merged.end(), design_less);
  if (merged.size() > static_cast<std::size_t>(options.top_k))
    merged.resize(options.top_k);
  return merged;
}

CriterionScore ModelDiscrimination::exchange_search(
    const SearchOptions& options) const {
  Workspace ws(models_.size(), options.n_star);

  // Seed with the best constant design.
  std::vector<int> best_rows(options.n_star, 0);
  double best = score_with(best_rows, ws);
  std::vector<int> rows(options.n_star);
  for (int r = 1; r < candidate_count_; ++r) {
    std::fill(rows.begin(), rows.end(), r);
    const double v = score_with(rows, ws);
    if (v > best) {
      best = v;
      best_rows = rows;
    }
  }

  bool improved = true;
  for (int pass = 0; improved && pass < 100; ++pass) {
    improved = false;
    for (int pos = 0; pos < options.n_star; ++pos) {
      for (int r = 0; r < candidate_count_; ++r) {
        rows = best_rows;
        rows[pos] = r;
        std::sort(rows.begin(), rows.end());
        const double v = score_with(rows, ws);
        if (v > best) {
          best = v;
          best_rows = rows;
          improved = true;
        }
      }
    }
  }

  CriterionScore cs;
  cs.design.run_indices = best_rows;
  cs.design.score = best;
  cs.value = best;
  return cs;
}

}  // namespace obayes
