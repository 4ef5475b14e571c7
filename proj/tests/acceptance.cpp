// Acceptance suite: runs the full reactor walkthrough and the numerical
// cross-checks end to end, printing one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "obayes/diagnostics.hpp"
#include "obayes/discrimination.hpp"
#include "obayes/errors.hpp"
#include "obayes/io.hpp"
#include "obayes/pipeline.hpp"
#include "obayes/specfun.hpp"
#include "oracles.hpp"
#include "reactor_data.hpp"

#ifndef OBAYES_DATA_DIR
#define OBAYES_DATA_DIR "data"
#endif

using namespace obayes;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : " - ", detail.c_str());
  if (!ok) ++failures;
}

bool within(double got, double want, double tol) {
  return std::isfinite(got) && std::abs(got - want) <= tol;
}

std::map<std::string, double> by_label(const PosteriorAnalysis& a) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < a.models.size(); ++i)
    out[a.models[i].model.label(a.space.names)] = a.posterior.entries[i].prob;
  return out;
}

std::vector<int> one_based(const std::vector<int>& rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i] + 1;
  return out;
}

std::string fmt_runs(const std::vector<int>& rows) {
  std::string s;
  for (std::size_t i = 0; i < rows.size(); ++i)
    s += (i ? " " : "") + std::to_string(rows[i]);
  return s;
}

}  // namespace

int main() {
  const std::string data_dir = OBAYES_DATA_DIR;
  ExperimentConfig cfg;  // defaults: 2FI, beta(1,1), omd, n*=4, top-5

  const LoadedDesign screening =
      read_design_csv(data_dir + "/reactor_screening.csv");
  const LoadedDesign followup =
      read_design_csv(data_dir + "/reactor_followup.csv");

  // ---- criterion 1: screening posterior, objective 2FI, < 1 s ----------
  {
    const auto t0 = std::chrono::steady_clock::now();
    const PosteriorAnalysis a = analyze_posterior(screening, cfg, false);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    const auto probs = by_label(a);
    const bool values = within(probs.at("null"), 0.32, 0.01) &&
                        within(probs.at("B,D,E"), 0.10, 0.01) &&
                        within(probs.at("B"), 0.08, 0.01) &&
                        within(probs.at("A,D"), 0.05, 0.01) &&
                        within(probs.at("B,D"), 0.05, 0.01);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "null %.3f B,D,E %.3f B %.3f A,D %.3f B,D %.3f (%.0f ms)",
                  probs.at("null"), probs.at("B,D,E"), probs.at("B"),
                  probs.at("A,D"), probs.at("B,D"), ms);
    report("criterion 1: screening top-5 model posterior within 0.01",
           values && ms < 1000.0, buf);
  }

  // ---- criterion 2: screening factor activity ---------------------------
  {
    const PosteriorAnalysis a = analyze_posterior(screening, cfg, false);
    const double want[5] = {0.28, 0.47, 0.15, 0.39, 0.21};
    bool ok = true;
    for (int j = 0; j < 5; ++j) ok = ok && within(a.activity[j], want[j], 0.01);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "A %.3f B %.3f C %.3f D %.3f E %.3f",
                  a.activity[0], a.activity[1], a.activity[2], a.activity[3],
                  a.activity[4]);
    report("criterion 2: screening factor activity within 0.01", ok, buf);
  }

  // ---- criteria 3 and 4: OMD searches ------------------------------------
  {
    const auto t0 = std::chrono::steady_clock::now();
    const FollowupResult r = run_followup(screening, cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const std::vector<std::vector<int>> want = {{11, 15, 26, 29},
                                                {15, 15, 29, 30},
                                                {11, 15, 26, 30},
                                                {11, 15, 29, 30},
                                                {11, 15, 25, 30}};
    bool sets_ok = r.ranked.size() == 5;
    for (std::size_t i = 0; sets_ok && i < want.size(); ++i)
      sets_ok = one_based(r.ranked[i].design.run_indices) == want[i];
    const bool top_ok = !r.ranked.empty() &&
                        within(r.ranked[0].value, 69.85, 0.05) &&
                        one_based(r.ranked[0].design.run_indices) == want[0];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "top {%s} score %.4f, 52360 designs in %.2f s",
                  r.ranked.empty()
                      ? "-"
                      : fmt_runs(one_based(r.ranked[0].design.run_indices)).c_str(),
                  r.ranked.empty() ? 0.0 : r.ranked[0].value, secs);
    report("criterion 3: OMD 2FI search matches the published top five",
           sets_ok && top_ok && secs < 60.0, buf);
  }
  {
    ExperimentConfig c3 = cfg;
    c3.interaction_order = 3;
    const FollowupResult r = run_followup(screening, c3);
    const bool ok = !r.ranked.empty() &&
                    one_based(r.ranked[0].design.run_indices) ==
                        std::vector<int>{4, 10, 11, 28} &&
                    within(r.ranked[0].value, 1.5647, 0.002);
    char buf[120];
    std::snprintf(
        buf, sizeof(buf), "top {%s} score %.4f",
        r.ranked.empty()
            ? "-"
            : fmt_runs(one_based(r.ranked[0].design.run_indices)).c_str(),
        r.ranked.empty() ? 0.0 : r.ranked[0].value);
    report("criterion 4: OMD 3FI search matches the published top design", ok, buf);
  }

  // ---- criterion 5: combined 12-run analysis -----------------------------
  HeterogeneityReport het_before, het_after;
  {
    const CombinedResult r = run_combined(screening, followup, cfg);
    het_before = r.before;
    het_after = r.after;
    const auto probs = by_label(r.combined);
    const double want_act[5] = {0.02, 0.98, 0.02, 0.93, 0.87};
    bool ok = within(probs.at("B,D,E"), 0.86, 0.02);
    for (int j = 0; j < 5; ++j)
      ok = ok && within(r.combined.activity[j], want_act[j], 0.02);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "B,D,E %.3f; activity A %.3f B %.3f C %.3f D %.3f E %.3f",
                  probs.at("B,D,E"), r.combined.activity[0],
                  r.combined.activity[1], r.combined.activity[2],
                  r.combined.activity[3], r.combined.activity[4]);
    report("criterion 5: combined analysis concentrates on B,D,E", ok, buf);
  }

  // ---- criterion 6: heterogeneity diagnostics ----------------------------
  {
    const bool ok = within(het_before.shannon_normalized, 0.74, 0.02) &&
                    within(het_after.shannon_normalized, 0.21, 0.02) &&
                    within(het_before.cv_factors, 0.39, 0.02) &&
                    within(het_after.cv_factors, 0.80, 0.02);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "shannon %.3f -> %.3f, cv %.3f -> %.3f",
                  het_before.shannon_normalized, het_after.shannon_normalized,
                  het_before.cv_factors, het_after.cv_factors);
    report("criterion 6: Shannon and CV deltas match the published tables", ok,
           buf);
  }

  // ---- criterion 7: oracle equivalence ------------------------------------
  {
    std::mt19937_64 rng(20250810);
    std::uniform_real_distribution<double> qdist(1e-3, 1.0);
    double worst_bf = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 6 + static_cast<int>(rng() % 27);
      const int t0 = 1 + static_cast<int>(rng() % 2);
      const int t = 1 + static_cast<int>(rng() % std::min(8, n - t0 - 1));
      const double q = qdist(rng);
      OlsSummary si, s0;
      si.sse = q;
      si.df = n - t0 - t;
      s0.sse = 1.0;
      s0.df = n - t0;
      const double closed = robust_log_bf(si, s0, t, t0, n).value;
      const double quad = oracles::robust_log_bf_quadrature(q, t, t0, n);
      worst_bf = std::max(worst_bf, std::abs(closed - quad));
    }

    double worst_f = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double z = -40.0 + 40.0 * i / 99.0;
      const double t_i = 1.0 + (i % 7), n = 8.0 + 3.0 * (i % 8);
      const specfun::Hyp2F1Args args{0.5 * (t_i + 1), 0.5 * (n - 1),
                                     0.5 * (t_i + 3), z};
      const double ref = static_cast<double>(
          oracles::hyp2f1_ld(args.a, args.b, args.c, args.z));
      worst_f = std::max(worst_f,
                         std::abs(specfun::hyp2f1(args) - ref) / std::abs(ref));
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "max |dlogBF| %.2e (tol 1e-6), max rel 2F1 error %.2e (tol 1e-10)",
                  worst_bf, worst_f);
    report("criterion 7: closed forms match quadrature and series oracles",
           worst_bf <= 1e-6 && worst_f <= 1e-10, buf);
  }

  // ---- criterion 8: property suite ----------------------------------------
  {
    bool ok = true;
    std::string detail;

    // Posterior normalization at 1e-12 across priors and datasets.
    for (const auto* design : {&screening, &followup}) {
      for (const std::string prior : {"beta:1,1", "beta:1,6", "pi:0.25"}) {
        ExperimentConfig c = cfg;
        c.prior_spec = prior;
        if (design == &followup) c.interaction_order = 2;
        const PosteriorAnalysis a = analyze_posterior(*design, c, false);
        double total = 0.0;
        for (const auto& e : a.posterior.entries) total += e.prob;
        if (std::abs(total - 1.0) > 1e-12) {
          ok = false;
          detail = "posterior normalization drift";
        }
      }
    }

    // OMD nonnegativity, permutation and scale invariance, log-det
    // cancellation, determinism.
    const PosteriorAnalysis a = analyze_posterior(screening, cfg, false);
    const Eigen::MatrixXd cand = enumerate_candidate_runs(a.space);
    const auto crit =
        ModelDiscrimination::objective(a.models, a.fits, a.posterior, cand, 0.0);
    const std::vector<int> rows = {10, 14, 25, 28};
    const double base_score = crit.score(rows);
    if (!(base_score >= -1e-9)) {
      ok = false;
      detail = "criterion negativity";
    }
    const std::vector<int> shuffled = {28, 25, 14, 10};
    if (std::abs(crit.score(shuffled) - base_score) > 1e-9) {
      ok = false;
      detail = "permutation variance";
    }

    LoadedDesign scaled = screening;
    scaled.table.y *= 9.25;
    const PosteriorAnalysis as = analyze_posterior(scaled, cfg, false);
    const auto crit_s =
        ModelDiscrimination::objective(as.models, as.fits, as.posterior, cand, 0.0);
    if (std::abs(crit_s.score(rows) - base_score) > 1e-9) {
      ok = false;
      detail = "scale variance";
    }

    // Log-det cancellation: the pairwise sum with explicit log-dets.
    {
      std::vector<PredictiveSummary> preds;
      std::vector<double> w;
      for (std::size_t i = 0; i < a.models.size(); ++i) {
        const Eigen::MatrixXd full = candidate_model_matrix(cand, a.models[i].model);
        Eigen::MatrixXd z(4, full.cols());
        for (int r = 0; r < 4; ++r) z.row(r) = full.row(rows[r]);
        preds.push_back(predictive_summary(a.fits[i], z));
        w.push_back(a.posterior.entries[i].prob);
      }
      double with_logdets = 0.0;
      for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = 0; j < preds.size(); ++j)
          if (i != j)
            with_logdets += w[i] * w[j] * kl_predictive(preds[i], preds[j]);
      if (std::abs(with_logdets - base_score) > 1e-9) {
        ok = false;
        detail = "log-det cancellation";
      }
    }

    // Serial vs parallel search determinism (exact equality).
    SearchOptions serial, parallel;
    serial.threads = 1;
    parallel.threads = 4;
    const auto r1 = crit.search(serial);
    const auto r2 = crit.search(parallel);
    if (r1.size() != r2.size()) {
      ok = false;
      detail = "search size mismatch";
    } else {
      for (std::size_t i = 0; i < r1.size(); ++i)
        if (r1[i].value != r2[i].value ||
            r1[i].design.run_indices != r2[i].design.run_indices) {
          ok = false;
          detail = "serial/parallel mismatch";
        }
    }

    // Multiset counts against the direct recursion.
    for (int c = 1; c <= 8 && ok; ++c)
      for (int s = 1; s <= 4; ++s)
        if (count_followup_designs(c, s) !=
            oracles::multiset_count_recursive(c, s)) {
          ok = false;
          detail = "multiset count mismatch";
        }

    report("criterion 8: property suite", ok, detail);
  }

  // ---- criterion 9: robust-vs-reference predictive convergence ------------
  {
    RobustReferenceOptions opts;
    opts.seed = cfg.seed;
    const RobustReferenceResult r = robust_vs_reference_check(
        FactorSpace::make(2, 2), FactorModel::forced({0, 1}, 2), opts);
    std::string curve;
    for (double v : r.kl) {
      char num[32];
      std::snprintf(num, sizeof(num), "%.4f ", v);
      curve += num;
    }
    report("criterion 9: predictive KL curve decreasing with final below 0.05",
           r.trend_decreasing && r.final_below_tolerance, "curve " + curve);
  }

  // ---- CMD properties (not a table-reproduction criterion) ----------------
  {
    const PosteriorAnalysis a = analyze_posterior(screening, cfg, false);
    bool ok = true;
    std::string detail;

    // gamma -> infinity limit of the conventional marginal.
    for (std::size_t i = 0; i < a.models.size(); ++i) {
      if (a.models[i].model.t() == 0) continue;
      const ModelMatrix& mm = a.models[i].matrix;
      const int n = screening.table.n();
      const double half = 0.5 * (n - 1);
      const Eigen::MatrixXd w = mm.full();
      const double ref = -half * std::log(2.0 * M_PI) -
                         0.5 * std::log((w.transpose() * w).determinant()) +
                         std::lgamma(half) + (half - 1.0) * std::log(2.0) -
                         half * std::log(a.fits[i].sse);
      const double gamma = 1e8;
      const double got =
          conventional_log_ml(mm, screening.table.y, gamma) +
          mm.t() * std::log(gamma);
      if (std::abs(got - ref) > 1e-6 * std::abs(ref)) {
        ok = false;
        detail = "flat-gamma limit drift";
      }
    }

    // Quadrature oracle for a one-term model.
    const ModelMatrix mm_b =
        build_model_matrix(screening.table, FactorModel::forced({1}, 2), false);
    const double closed = conventional_log_ml(mm_b, screening.table.y, 0.4);
    const double quad = oracles::conventional_log_ml_quadrature(
        screening.table.runs.col(1), screening.table.y, 0.4);
    if (std::abs(closed - quad) > 1e-6 * std::abs(closed)) {
      ok = false;
      detail = "quadrature oracle drift";
    }
    report("CMD acceptance: flat-gamma limit and quadrature oracle at 1e-6", ok,
           detail);
  }

  // ---- CLI end-to-end ------------------------------------------------------
#ifdef OBAYES_CLI_PATH
  {
    const std::string cli = OBAYES_CLI_PATH;
    const std::string out_dir = "acceptance_cli_out";
    const int rc_ok = std::system(
        (cli + " posterior " + data_dir + "/reactor_screening.csv --out " +
         out_dir + " > " + out_dir + ".log 2>&1")
            .c_str());
    bool ok = rc_ok == 0;

    // Determinism under different thread caps: byte-identical reports.
    const std::string d1 = out_dir + "_t1", d2 = out_dir + "_t4";
    std::system(("OBAYES_THREADS=1 " + cli + " followup " + data_dir +
                 "/reactor_screening.csv --out " + d1 + " > /dev/null 2>&1")
                    .c_str());
    std::system(("OBAYES_THREADS=4 " + cli + " followup " + data_dir +
                 "/reactor_screening.csv --out " + d2 + " > /dev/null 2>&1")
                    .c_str());
    auto slurp = [](const std::string& p) {
      std::ifstream f(p);
      std::stringstream ss;
      ss << f.rdbuf();
      return ss.str();
    };
    const std::string designs1 = slurp(d1 + "/followup_designs.csv");
    const std::string designs2 = slurp(d2 + "/followup_designs.csv");
    ok = ok && !designs1.empty() && designs1 == designs2;
    ok = ok && designs1.find("11 15 26 29") != std::string::npos;

    // Validation failure surfaces exit code 2.
    {
      std::ofstream bad("acceptance_bad.csv");
      bad << "A,y\n2,1\n";
    }
    const int rc_bad = std::system(
        (cli + " posterior acceptance_bad.csv > /dev/null 2>&1").c_str());
    ok = ok && WIFEXITED(rc_bad) && WEXITSTATUS(rc_bad) == 2;

    report("CLI: posterior and followup runs, deterministic reports, exit codes",
           ok);
  }
#endif

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "OK", failures);
  return failures ? 1 : 0;
}
