#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "obayes/errors.hpp"
#include "obayes/factorial.hpp"
#include "oracles.hpp"
#include "reactor_data.hpp"

using namespace obayes;

namespace {

/// The replicated 2^{4-1} design with defining relation I = ACEH that the
/// injection-molding screening collapses onto (factors A, C, E, H).
DesignTable collapsed_injection_design() {
  DesignTable d;
  d.runs.resize(16, 4);
  int row = 0;
  for (int rep = 0; rep < 2; ++rep)
    for (int r = 0; r < 16; ++r) {
      double lv[4];
      for (int j = 0; j < 4; ++j) lv[j] = ((r >> j) & 1) ? 1.0 : -1.0;
      if (lv[0] * lv[1] * lv[2] * lv[3] < 0) continue;  // keep the I=ACEH half
      for (int j = 0; j < 4; ++j) d.runs(row, j) = lv[j];
      ++row;
    }
  REQUIRE(row == 16);
  d.y = Eigen::VectorXd::LinSpaced(16, 1.0, 16.0);
  return d;
}

}  // namespace

TEST_CASE("candidate run table follows the standard numbering") {
  SUBCASE("k=1") {
    const auto t = enumerate_candidate_runs(FactorSpace::make(1, 2));
    REQUIRE(t.rows() == 2);
    CHECK(t(0, 0) == -1.0);
    CHECK(t(1, 0) == 1.0);
  }
  SUBCASE("k=5 row 11 and run 2 flips the first factor") {
    const auto t = enumerate_candidate_runs(FactorSpace::make(5, 2));
    REQUIRE(t.rows() == 32);
    // Run 11 (1-based) is (-,+,-,+,-).
    const Eigen::RowVectorXd want = (Eigen::RowVectorXd(5) << -1, 1, -1, 1, -1).finished();
    CHECK(t.row(10) == want);
    CHECK(t(1, 0) == 1.0);
    for (int j = 1; j < 5; ++j) CHECK(t(1, j) == -1.0);
  }
  SUBCASE("k=4 rows cover the published candidate set") {
    const auto t = enumerate_candidate_runs(FactorSpace::make(4, 2));
    REQUIRE(t.rows() == 16);
    // The published 2^4 candidate table lists the same 16 level patterns,
    // fraction-first; compare as sets.
    const int patterns[16][4] = {
        {-1, -1, -1, -1}, {-1, -1, +1, +1}, {-1, +1, -1, +1}, {-1, +1, +1, -1},
        {+1, -1, -1, +1}, {+1, -1, +1, -1}, {+1, +1, -1, -1}, {+1, +1, +1, +1},
        {-1, -1, -1, +1}, {-1, -1, +1, -1}, {-1, +1, -1, -1}, {-1, +1, +1, +1},
        {+1, -1, -1, -1}, {+1, -1, +1, +1}, {+1, +1, -1, +1}, {+1, +1, +1, -1}};
    std::set<std::vector<int>> want, got;
    for (const auto& p : patterns) want.insert({p[0], p[1], p[2], p[3]});
    for (int r = 0; r < 16; ++r)
      got.insert({int(t(r, 0)), int(t(r, 1)), int(t(r, 2)), int(t(r, 3))});
    CHECK(want == got);
  }
}

TEST_CASE("build_model_matrix null model") {
  DesignTable d = fixtures::reactor_screening();
  FactorModel null_model;
  const ModelMatrix mm = build_model_matrix(d, null_model, false);
  CHECK(mm.t0() == 1);
  CHECK(mm.t() == 0);
  CHECK(mm.df == 7);
  CHECK(mm.rank_ok);
  CHECK(mm.x0.col(0).isApprox(Eigen::VectorXd::Ones(8)));
}

TEST_CASE("build_model_matrix reactor {B,D,E} 2FI") {
  DesignTable d = fixtures::reactor_screening();
  const FactorModel m = FactorModel::forced({1, 3, 4}, 2);
  const ModelMatrix mm = build_model_matrix(d, m, false);
  CHECK(mm.t() == 6);
  CHECK(mm.df == 1);
  CHECK(mm.rank_ok);
  // Independent rank check via exact integer elimination.
  CHECK(oracles::exact_rank_pm1(mm.full()) == 7);
}

TEST_CASE("build_model_matrix aliased forced pairs fail the rank check") {
  DesignTable d = collapsed_injection_design();
  const FactorModel m = FactorModel::forced({0, 1, 2, 3}, 2);
  const ModelMatrix mm = build_model_matrix(d, m, false);
  CHECK_FALSE(mm.rank_ok);  // CE = AH etc. under I = ACEH
  CHECK(oracles::exact_rank_pm1(mm.full()) < mm.full().cols());
}

TEST_CASE("build_model_matrix rejects out-of-space terms") {
  DesignTable d = fixtures::reactor_screening();
  FactorModel m;
  m.active = {7};
  m.terms = {{7}};
  CHECK_THROWS_AS(build_model_matrix(d, m, false), ValidationError);
}

TEST_CASE("enumerate_models on the reactor screening fraction") {
  const DesignTable d = fixtures::reactor_screening();

  SUBCASE("2FI space") {
    EnumerationSummary sum;
    const auto models =
        enumerate_models(FactorSpace::make(5, 2), d, false, &sum);
    CHECK(models.size() == 26);
    CHECK(models.size() <= 32);
    CHECK(models.front().model.active.empty());  // null first
    CHECK(sum.admissible == 26);
    CHECK(sum.total_subsets == 32);
    // {A,B,D} survives with its aliased pairs absorbed into the mains.
    bool found_abd = false;
    for (const auto& em : models)
      if (em.model.active == std::vector<int>{0, 1, 3}) {
        found_abd = true;
        CHECK(em.model.t() == 3);
        CHECK(em.absorbed_terms == 3);
      }
    CHECK(found_abd);
  }

  SUBCASE("3FI space drops every three-factor model") {
    const auto models = enumerate_models(FactorSpace::make(5, 3), d, false);
    CHECK(models.size() == 16);
    for (const auto& em : models) CHECK(em.model.f() <= 2);
  }
}

TEST_CASE("enumerate_models k=1") {
  DesignTable d;
  d.runs.resize(4, 1);
  d.runs << -1, 1, -1, 1;
  d.y.resize(4);
  d.y << 1.0, 2.0, 1.5, 2.5;
  const auto models = enumerate_models(FactorSpace::make(1, 2), d, false);
  REQUIRE(models.size() == 2);
  CHECK(models[0].model.active.empty());
  CHECK(models[1].model.active == std::vector<int>{0});
}

TEST_CASE("enumerate_models full factorial admits every model") {
  const DesignTable d = fixtures::reactor_full32();
  const auto models = enumerate_models(FactorSpace::make(5, 3), d, false);
  CHECK(models.size() == 32);
  for (const auto& em : models) CHECK(em.absorbed_terms == 0);
}

TEST_CASE("enumerate_models collapsed injection keeps one of each aliased pair") {
  DesignTable d = collapsed_injection_design();
  const auto models = enumerate_models(FactorSpace::make(4, 2), d, false);
  for (const auto& em : models)
    if (em.model.active == std::vector<int>{0, 1, 2, 3}) {
      CHECK(em.model.t() == 7);  // 4 mains + 3 of the 6 pairwise terms
      CHECK(em.absorbed_terms == 3);
      return;
    }
  FAIL("full model not found in the collapsed-injection space");
}

TEST_CASE("model matrix columns square to one and match term products") {
  const DesignTable d = fixtures::reactor_screening();
  const auto models = enumerate_models(FactorSpace::make(5, 2), d, false);
  for (const auto& em : models) {
    for (int j = 0; j < em.matrix.t(); ++j) {
      const Eigen::VectorXd col = em.matrix.xi.col(j);
      CHECK(col.cwiseProduct(col).isApprox(Eigen::VectorXd::Ones(d.n())));
      CHECK(col.isApprox(term_column(d.runs, em.model.terms[j])));
    }
  }
}

TEST_CASE("rank_ok is invariant under factor sign flips") {
  std::mt19937_64 rng(99);
  const DesignTable base = fixtures::reactor_screening();
  const auto space = FactorSpace::make(5, 2);
  for (int trial = 0; trial < 10; ++trial) {
    DesignTable flipped = base;
    for (int j = 0; j < 5; ++j)
      if (rng() & 1) flipped.runs.col(j) *= -1.0;
    for (const auto& active :
         std::vector<std::vector<int>>{{1, 3, 4}, {0, 1, 3}, {0, 2, 4}, {0, 1}}) {
      const FactorModel m = FactorModel::forced(active, 2);
      CHECK(build_model_matrix(base, m, false).rank_ok ==
            build_model_matrix(flipped, m, false).rank_ok);
    }
  }
}

TEST_CASE("block coding 0/1 or +/-1 spans the same space") {
  DesignTable d = fixtures::reactor_combined();
  const FactorModel m = FactorModel::forced({1, 3, 4}, 2);
  const ModelMatrix coded = build_model_matrix(d, m, true);

  // Replace the +/-1 block column by 0/1 and refit by brute force.
  Eigen::MatrixXd z01 = coded.full();
  z01.col(1) = (z01.col(1).array() + 1.0) / 2.0;
  const double sse_pm = oracles::lstsq_svd_ld(coded.full(), d.y).sse;
  const double sse_01 = oracles::lstsq_svd_ld(z01, d.y).sse;
  CHECK(sse_pm == doctest::Approx(sse_01).epsilon(1e-12));
}

TEST_CASE("followup design counts") {
  CHECK(count_followup_designs(16, 4) == 3876);
  CHECK(count_followup_designs(32, 4) == 52360);
  CHECK_THROWS_AS(count_followup_designs(std::uint64_t{1} << 40, 4),
                  DesignSpaceOverflow);
  CHECK_THROWS_AS(count_followup_designs(0, 4), ValidationError);
}

TEST_CASE("followup design counts match the direct recursion") {
  for (int c = 1; c <= 8; ++c)
    for (int s = 1; s <= 4; ++s)
      CHECK(count_followup_designs(c, s) == oracles::multiset_count_recursive(c, s));
}

TEST_CASE("followup enumerator yields sorted multisets in lexicographic order") {
  FollowupDesignEnumerator en(2, 2);
  std::vector<int> idx;
  std::vector<std::vector<int>> seen;
  while (en.next(idx)) seen.push_back(idx);
  const std::vector<std::vector<int>> want = {{0, 0}, {0, 1}, {1, 1}};
  CHECK(seen == want);
}

TEST_CASE("followup enumerator covers the space exactly once") {
  FollowupDesignEnumerator en(5, 3);
  std::vector<int> idx;
  std::set<std::vector<int>> seen;
  std::vector<int> prev;
  while (en.next(idx)) {
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    if (!prev.empty()) CHECK(prev < idx);
    prev = idx;
    seen.insert(idx);
  }
  CHECK(seen.size() == count_followup_designs(5, 3));
}

TEST_CASE("followup enumerator seek matches sequential traversal") {
  const std::uint64_t total = count_followup_designs(7, 4);
  FollowupDesignEnumerator seq(7, 4);
  std::vector<std::vector<int>> all;
  std::vector<int> idx;
  while (seq.next(idx)) all.push_back(idx);
  REQUIRE(all.size() == total);
  for (std::uint64_t r : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{17},
                          total - 1, total}) {
    FollowupDesignEnumerator en(7, 4);
    en.seek(r);
    if (r == total) {
      CHECK_FALSE(en.next(idx));
    } else {
      REQUIRE(en.next(idx));
      CHECK(idx == all[r]);
    }
  }
}
