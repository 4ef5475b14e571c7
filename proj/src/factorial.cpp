#include "obayes/factorial.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "obayes/errors.hpp"

namespace obayes {

namespace {

constexpr double kRankTol = 1e-10;

void append_combinations(const std::vector<int>& items, int size,
                         std::vector<Term>& out) {
  const int m = static_cast<int>(items.size());
  if (size <= 0 || size > m) return;
  std::vector<int> idx(size);
  for (int i = 0; i < size; ++i) idx[i] = i;
  while (true) {
    Term term(size);
    for (int i = 0; i < size; ++i) term[i] = items[idx[i]];
    out.push_back(std::move(term));
    int pos = size - 1;
    while (pos >= 0 && idx[pos] == m - size + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < size; ++i) idx[i] = idx[i - 1] + 1;
  }
}

/// Incremental orthonormal basis used for the estimability checks.
class SpanTracker {
 public:
  explicit SpanTracker(int n) : basis_(n, 0) {}

  /// Returns true if c extends the current span. When `keep` is set and
  /// the column extends the span, its normalized residual joins the basis.
  bool extends(const Eigen::VectorXd& c, bool keep) {
    Eigen::VectorXd r = c;
    for (int pass = 0; pass < 2; ++pass)  // re-orthogonalize once
      if (basis_.cols() > 0) r -= basis_ * (basis_.transpose() * r);
    if (r.norm() <= kRankTol * std::max(1.0, c.norm())) return false;
    if (keep) {
      basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
      basis_.col(basis_.cols() - 1) = r / r.norm();
    }
    return true;
  }

 private:
  Eigen::MatrixXd basis_;
};

Eigen::MatrixXd common_columns(const DesignTable& design, bool with_block) {
  const int n = design.n();
  if (!with_block) return Eigen::MatrixXd::Ones(n, 1);
  Eigen::MatrixXd x0(n, 2);
  x0.col(0) = Eigen::VectorXd::Ones(n);
  x0.col(1) = design.block_column();
  return x0;
}

}  // namespace

std::vector<Term> forced_terms(const std::vector<int>& active, int interaction_order) {
  std::vector<Term> out;
  append_combinations(active, 1, out);
  append_combinations(active, 2, out);
  if (interaction_order >= 3) append_combinations(active, 3, out);
  return out;
}

Eigen::VectorXd term_column(const Eigen::MatrixXd& coded_runs, const Term& term) {
  Eigen::VectorXd c = Eigen::VectorXd::Ones(coded_runs.rows());
  for (int f : term) {
    if (f < 0 || f >= coded_runs.cols())
      throw ValidationError("term factor index out of range for design");
    c = c.cwiseProduct(coded_runs.col(f));
  }
  return c;
}

FactorSpace FactorSpace::make(int k, int interaction_order) {
  std::vector<std::string> names;
  names.reserve(k);
  for (int i = 0; i < k; ++i) {
    if (i < 26)
      names.push_back(std::string(1, static_cast<char>('A' + i)));
    else
      names.push_back("F" + std::to_string(i + 1));
  }
  return make(std::move(names), interaction_order);
}

FactorSpace FactorSpace::make(std::vector<std::string> names, int interaction_order) {
  FactorSpace s;
  s.k = static_cast<int>(names.size());
  s.names = std::move(names);
  s.interaction_order = interaction_order;
  s.validate();
  return s;
}

void FactorSpace::validate() const {
  if (k < 1 || k > 16)
    throw ValidationError("factor count must be between 1 and 16, got " +
                          std::to_string(k));
  if (interaction_order != 2 && interaction_order != 3)
    throw ValidationError("interaction order must be 2 or 3");
  if (static_cast<int>(names.size()) != k)
    throw ValidationError("factor name count does not match k");
  std::set<std::string> uniq(names.begin(), names.end());
  if (static_cast<int>(uniq.size()) != k)
    throw ValidationError("factor names must be unique");
}

Eigen::VectorXd DesignTable::block_column() const {
  if (!has_block()) throw ValidationError("design has no block labels");
  const std::string& first = block.front();
  Eigen::VectorXd col(n());
  for (int i = 0; i < n(); ++i) col[i] = (block[i] == first) ? -1.0 : 1.0;
  return col;
}

void DesignTable::validate() const {
  if (runs.rows() < 1) throw ValidationError("design has no runs");
  if (runs.cols() < 1) throw ValidationError("design has no factors");
  if (y.size() != runs.rows())
    throw ValidationError("response length " + std::to_string(y.size()) +
                          " does not match run count " +
                          std::to_string(runs.rows()));
  for (int i = 0; i < runs.rows(); ++i)
    for (int j = 0; j < runs.cols(); ++j)
      if (runs(i, j) != 1.0 && runs(i, j) != -1.0)
        throw ValidationError("design entry at run " + std::to_string(i + 1) +
                              ", factor " + std::to_string(j + 1) +
                              " is not -1 or +1");
  if (!block.empty()) {
    if (static_cast<int>(block.size()) != n())
      throw ValidationError("block label count does not match run count");
    std::set<std::string> labels(block.begin(), block.end());
    if (labels.size() != 2)
      throw ValidationError(
          "block column must have exactly two distinct labels, got " +
          std::to_string(labels.size()));
  }
}

std::string FactorModel::label(const std::vector<std::string>& names) const {
  if (active.empty()) return "null";
  std::ostringstream os;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (i) os << ",";
    os << names.at(active[i]);
  }
  return os.str();
}

FactorModel FactorModel::forced(std::vector<int> active, int interaction_order) {
  std::sort(active.begin(), active.end());
  FactorModel m;
  m.terms = forced_terms(active, interaction_order);
  m.active = std::move(active);
  return m;
}

Eigen::MatrixXd ModelMatrix::full() const {
  Eigen::MatrixXd z(x0.rows(), x0.cols() + xi.cols());
  z << x0, xi;
  return z;
}

ModelMatrix build_model_matrix(const DesignTable& design, const FactorModel& model,
                               bool with_block) {
  design.validate();
  for (const Term& term : model.terms)
    for (int f : term)
      if (f < 0 || f >= design.k())
        throw ValidationError("model term references factor " +
                              std::to_string(f + 1) +
                              " outside the design's factor space");
  ModelMatrix mm;
  mm.x0 = common_columns(design, with_block);
  mm.xi.resize(design.n(), model.t());
  for (int j = 0; j < model.t(); ++j)
    mm.xi.col(j) = term_column(design.runs, model.terms[j]);
  mm.df = design.n() - mm.t0() - mm.t();

  const Eigen::MatrixXd z = mm.full();
  bool full_rank = z.rows() >= z.cols();
  if (full_rank) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(z);
    const auto& sv = svd.singularValues();
    full_rank = sv(sv.size() - 1) > kRankTol * sv(0);
  }
  mm.rank_ok = full_rank && mm.df >= 1;
  return mm;
}

std::vector<EnumeratedModel> enumerate_models(const FactorSpace& space,
                                              const DesignTable& design,
                                              bool with_block,
                                              EnumerationSummary* summary) {
  space.validate();
  design.validate();
  if (space.k != design.k())
    throw ValidationError("factor space and design disagree on factor count");

  const int n = design.n();
  const Eigen::MatrixXd x0 = common_columns(design, with_block);
  const int t0 = static_cast<int>(x0.cols());

  EnumerationSummary local;
  local.total_subsets = std::uint64_t{1} << space.k;

  std::vector<int> all_factors(space.k);
  for (int i = 0; i < space.k; ++i) all_factors[i] = i;
  std::vector<std::vector<int>> subsets;
  subsets.reserve(local.total_subsets);
  subsets.push_back({});
  for (int f = 1; f <= space.k; ++f) {
    std::vector<Term> combos;
    append_combinations(all_factors, f, combos);
    for (auto& c : combos) subsets.push_back(std::move(c));
  }

  std::vector<EnumeratedModel> out;
  for (const auto& active : subsets) {
    const std::vector<Term> forced = forced_terms(active, space.interaction_order);
    if (n - t0 - static_cast<int>(forced.size()) < 1) {
      ++local.dropped_insufficient_df;
      continue;
    }

    SpanTracker common_span(n);
    for (int j = 0; j < t0; ++j) common_span.extends(x0.col(j), true);
    SpanTracker model_span = common_span;

    bool dead = false;
    std::vector<Term> kept;
    int absorbed = 0;
    for (const Term& term : forced) {
      const Eigen::VectorXd c = term_column(design.runs, term);
      if (!common_span.extends(c, false)) {
        dead = true;  // confounded with the common columns
        break;
      }
      if (!model_span.extends(c, true)) {
        if (term.size() == 1) {
          dead = true;  // duplicated main effect
          break;
        }
        ++absorbed;  // interaction absorbed by the model's earlier columns
        continue;
      }
      kept.push_back(term);
    }
    if (dead) {
      ++local.dropped_aliasing;
      continue;
    }

    FactorModel model;
    model.active = active;
    model.terms = std::move(kept);
    ModelMatrix mm = build_model_matrix(design, model, with_block);
    if (!mm.rank_ok) {
      ++local.dropped_aliasing;
      continue;
    }
    ++local.admissible;
    if (absorbed > 0) ++local.models_with_absorbed_terms;
    out.push_back({std::move(model), std::move(mm), absorbed});
  }

  if (summary) *summary = local;
  return out;
}

Eigen::MatrixXd enumerate_candidate_runs(const FactorSpace& space) {
  space.validate();
  const int rows = 1 << space.k;
  Eigen::MatrixXd table(rows, space.k);
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < space.k; ++j)
      table(r, j) = ((r >> j) & 1) ? 1.0 : -1.0;
  return table;
}

std::uint64_t count_followup_designs(std::uint64_t candidates, std::uint64_t n_star) {
  if (candidates < 1 || n_star < 1)
    throw ValidationError("need at least one candidate and one follow-up run");
  const std::uint64_t n = candidates + n_star - 1;
  const std::uint64_t r = std::min(n_star, n - n_star);
  unsigned __int128 result = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    result = result * (n - r + i) / i;  // exact: prefix binomials are integers
    if (result > std::numeric_limits<std::uint64_t>::max())
      throw DesignSpaceOverflow(
          "follow-up design count exceeds 64-bit range; exhaustive search infeasible");
  }
  return static_cast<std::uint64_t>(result);
}

FollowupDesignEnumerator::FollowupDesignEnumerator(int candidate_count, int n_star)
    : c_(candidate_count),
      n_star_(n_star),
      total_(count_followup_designs(candidate_count, n_star)),
      current_(n_star, 0) {}

bool FollowupDesignEnumerator::next(std::vector<int>& indices) {
  if (emitted_ >= total_) return false;
  if (started_) {
    int pos = n_star_ - 1;
    while (pos >= 0 && current_[pos] == c_ - 1) --pos;
    if (pos < 0) return false;
    const int v = current_[pos] + 1;
    for (int i = pos; i < n_star_; ++i) current_[i] = v;
  }
  started_ = true;
  ++emitted_;
  indices = current_;
  return true;
}

void FollowupDesignEnumerator::seek(std::uint64_t rank) {
  emitted_ = std::min(rank, total_);
  started_ = false;
  if (rank >= total_) return;
  std::uint64_t remaining = rank;
  int low = 0;
  for (int pos = 0; pos < n_star_; ++pos) {
    const int slots_after = n_star_ - pos - 1;
    for (int v = low; v < c_; ++v) {
      const std::uint64_t block =
          slots_after == 0
              ? 1
              : count_followup_designs(static_cast<std::uint64_t>(c_ - v),
                                       static_cast<std::uint64_t>(slots_after));
      if (remaining < block) {
        current_[pos] = v;
        low = v;
        break;
      }
      remaining -= block;
    }
  }
  // next() will emit current_ as positioned here.
}

}  // namespace obayes
