#include "obayes/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "obayes/detail/quadrature.hpp"
#include "obayes/errors.hpp"
#include "obayes/posterior.hpp"
#include "obayes/specfun.hpp"

namespace obayes {

double shannon_heterogeneity(const std::vector<double>& probs,
                             std::size_t normalizer_count) {
  if (normalizer_count < 2)
    throw ValidationError("Shannon heterogeneity needs at least two models");
  double h = 0.0;
  for (double p : probs) {
    if (p < 0.0 || p > 1.0 + 1e-12)
      throw ValidationError("probabilities must lie in [0, 1]");
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(normalizer_count));
}

double cv_factor_activity(const std::vector<double>& activity) {
  if (activity.empty()) throw ValidationError("no factor activities given");
  const double mean =
      std::accumulate(activity.begin(), activity.end(), 0.0) / activity.size();
  if (!(mean > 0.0))
    throw ValidationError("coefficient of variation undefined for zero mean");
  double ss = 0.0;
  for (double a : activity) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / activity.size()) / mean;
}

std::vector<ContrastEntry> factorial_contrasts(const DesignTable& design, int order) {
  design.validate();
  const int k = design.k();
  const int n = design.n();
  if (n != (1 << k))
    throw ValidationError("contrasts require a complete 2^k factorial design");
  std::vector<bool> seen(n, false);
  for (int i = 0; i < n; ++i) {
    int idx = 0;
    for (int j = 0; j < k; ++j)
      if (design.runs(i, j) > 0) idx |= 1 << j;
    if (seen[idx])
      throw ValidationError("contrasts require each factorial run exactly once");
    seen[idx] = true;
  }

  std::vector<int> all(k);
  std::iota(all.begin(), all.end(), 0);
  std::vector<ContrastEntry> out;
  const double scale = 1.0 / static_cast<double>(1 << (k - 1));
  for (const Term& term : forced_terms(all, std::min(order, 3))) {
    if (static_cast<int>(term.size()) > order) continue;
    ContrastEntry e;
    e.term = term;
    e.value = scale * term_column(design.runs, term).dot(design.y);
    out.push_back(std::move(e));
  }

  // Normal-plot positions by ascending contrast.
  std::vector<std::size_t> idx(out.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return out[a].value < out[b].value;
  });
  for (std::size_t rank = 0; rank < idx.size(); ++rank)
    out[idx[rank]].quantile = (rank + 0.5) / static_cast<double>(idx.size());
  return out;
}

namespace {

double log_t_pdf(double x, double nu, double log_norm) {
  return log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double t_log_norm(double nu) {
  using specfun::log_gamma;
  return log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) -
         0.5 * std::log(nu * M_PI);
}

}  // namespace

RobustReferenceResult robust_vs_reference_check(const FactorSpace& space,
                                                const FactorModel& model,
                                                const RobustReferenceOptions& options) {
  space.validate();
  if (model.t() < 1)
    throw ValidationError("robust-vs-reference check needs a non-null model");
  const int base = 1 << space.k;

  // Seeded generating coefficients; Box-Muller keeps the stream portable.
  std::mt19937_64 rng(options.seed);
  auto normal = [&rng]() {
    const double u1 =
        (static_cast<double>(rng()) + 1.0) / (static_cast<double>(rng.max()) + 2.0);
    const double u2 =
        (static_cast<double>(rng()) + 1.0) / (static_cast<double>(rng.max()) + 2.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  Eigen::VectorXd beta(model.t());
  for (int j = 0; j < model.t(); ++j) beta[j] = 2.0 * options.sigma * normal();

  const int n_max = *std::max_element(options.sizes.begin(), options.sizes.end());
  Eigen::VectorXd raw(n_max);
  for (int i = 0; i < n_max; ++i) raw[i] = normal();

  RobustReferenceResult result;
  result.sizes = options.sizes;

  for (int n : options.sizes) {
    if (n < base || n % base != 0)
      throw ValidationError("sizes must be positive multiples of the 2^k base");
    // Replicated full factorial.
    DesignTable design;
    design.runs.resize(n, space.k);
    const Eigen::MatrixXd table = enumerate_candidate_runs(space);
    for (int r = 0; r < n; ++r) design.runs.row(r) = table.row(r % base);
    design.y = Eigen::VectorXd::Zero(n);

    FactorModel m = model;
    ModelMatrix mm = build_model_matrix(design, m, false);
    const int t_i = mm.t();
    const int df = n - 1 - t_i;
    if (df < 1)
      throw ValidationError("model leaves no residual degrees of freedom at n=" +
                            std::to_string(n));

    // Noise: residual-space projection of the seeded draw, scaled so that
    // SSE = df * sigma^2 exactly; the fit then recovers beta exactly and
    // the divergence curve depends only on the size schedule.
    const Eigen::MatrixXd z = mm.full();
    Eigen::VectorXd e = raw.head(n);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    const Eigen::MatrixXd q_thin =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, z.cols());
    e -= q_thin * (q_thin.transpose() * e);
    if (e.norm() < 1e-12)
      throw NumericalError("degenerate noise draw in robust-vs-reference check");
    e *= options.sigma * std::sqrt(static_cast<double>(df)) / e.norm();

    design.y = Eigen::VectorXd::Constant(n, options.intercept) + mm.xi * beta + e;

    // Orthogonal, balanced design: the appendix formulas apply exactly.
    const double ybar = design.y.mean();
    const Eigen::MatrixXd xtx_inv =
        (mm.xi.transpose() * mm.xi)
            .ldlt()
            .solve(Eigen::MatrixXd::Identity(t_i, t_i));
    const Eigen::VectorXd bhat = xtx_inv * (mm.xi.transpose() * design.y);
    const double sse = (design.y - Eigen::VectorXd::Constant(n, ybar) -
                        mm.xi * bhat)
                           .squaredNorm();
    const double sse0 =
        (design.y.array() - ybar).matrix().squaredNorm();

    // Follow-up point: the all-minus run.
    Eigen::VectorXd xterms(t_i);
    Eigen::MatrixXd one_run(1, space.k);
    one_run.row(0) = table.row(0);
    for (int j = 0; j < t_i; ++j)
      xterms[j] = term_column(one_run, m.terms[j])(0);

    const double yhat = ybar + xterms.dot(bhat);
    const double vstar = 1.0 + 1.0 / n + xterms.dot(xtx_inv * xterms);
    const double ref_scale = std::sqrt(sse / df * vstar);
    const double ref_norm = t_log_norm(df);

    // Robust predictive: mixture over g through v = (g+1)^{-1/2}, under
    // which p^R(g) dg is the uniform measure dv / v_max on (0, v_max].
    const double vmax = std::sqrt((t_i + 1.0) / (1.0 + n));
    static const detail::GaussLegendre gl(96);
    const double mix_norm = t_log_norm(n - 1.0);
    auto robust_pdf = [&](double u) {
      auto integrand = [&](double v) {
        const double g = 1.0 / (v * v) - 1.0;
        const double w = g / (g + 1.0);
        const double mean_g = ybar + w * xterms.dot(bhat);
        const double s_g = 1.0 + 1.0 / n + w * xterms.dot(xtx_inv * xterms);
        const double shape = w * (sse + sse0 / g);
        const double scale = std::sqrt(shape / (n - 1.0) * s_g);
        return std::exp(log_t_pdf((u - mean_g) / scale, n - 1.0, mix_norm)) /
               scale;
      };
      return gl.integrate(integrand, 1e-9, vmax) / vmax;
    };

    // KL(reference || robust) on a wide bracket by Simpson's rule.
    const double lo = yhat - 12.0 * ref_scale, hi = yhat + 12.0 * ref_scale;
    const int cells = 800;
    const double h = (hi - lo) / cells;
    auto point = [&](double u) {
      const double lf = log_t_pdf((u - yhat) / ref_scale, df, ref_norm) -
                        std::log(ref_scale);
      const double f = std::exp(lf);
      const double g = std::max(robust_pdf(u), 1e-300);
      return f * (lf - std::log(g));
    };
    double kl = point(lo) + point(hi);
    for (int i = 1; i < cells; ++i)
      kl += point(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    kl *= h / 3.0;
    result.kl.push_back(kl);
  }

  result.trend_decreasing = true;
  for (std::size_t i = 1; i < result.kl.size(); ++i)
    if (!(result.kl[i] < 1.1 * result.kl[i - 1])) result.trend_decreasing = false;
  result.final_below_tolerance =
      !result.kl.empty() && result.kl.back() < options.final_tolerance;
  return result;
}

}  // namespace obayes
