#include "obayes/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "obayes/errors.hpp"

namespace obayes {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_level(const std::string& cell, const std::string& origin, int line_no,
                   const std::string& column) {
  if (cell == "-" || cell == "-1") return -1.0;
  if (cell == "+" || cell == "+1" || cell == "1") return 1.0;
  throw ValidationError(origin + ":" + std::to_string(line_no) + ": column '" +
                        column + "': factor level '" + cell +
                        "' is not one of -1, +1, -, +");
}

double parse_number(const std::string& cell, const std::string& origin, int line_no,
                    const std::string& column) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(origin + ":" + std::to_string(line_no) + ": column '" +
                          column + "': cannot parse number '" + cell + "'");
  }
}

std::string format_double(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

double rounded(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

std::string runs_string(const std::vector<int>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) os << " ";
    os << rows[i] + 1;
  }
  return os.str();
}

/// Models sorted by posterior probability descending, enumeration order
/// breaking ties.
std::vector<std::size_t> posterior_order(const ModelPosterior& post) {
  std::vector<std::size_t> idx(post.entries.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return post.entries[a].prob > post.entries[b].prob;
  });
  return idx;
}

}  // namespace

std::string term_label(const Term& term, const std::vector<std::string>& names) {
  std::string s;
  for (int f : term) s += names.at(f);
  return s;
}

LoadedDesign parse_design_csv(std::istream& in, const std::string& origin) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty())
    throw ValidationError(origin + ": empty file, expected a CSV header");

  int y_col = -1, block_col = -1;
  std::vector<int> factor_cols;
  std::vector<std::string> names;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) {
    if (header[j] == "y") {
      if (y_col >= 0)
        throw ValidationError(origin + ": duplicate 'y' column");
      y_col = j;
    } else if (header[j] == "block") {
      if (block_col >= 0)
        throw ValidationError(origin + ": duplicate 'block' column");
      block_col = j;
    } else if (header[j] == "run") {
      // Run-index columns from exported candidate tables are ignored.
    } else {
      if (header[j].empty())
        throw ValidationError(origin + ":1: empty factor name in header");
      factor_cols.push_back(j);
      names.push_back(header[j]);
    }
  }
  if (y_col < 0)
    throw ValidationError(origin + ": required column 'y' is missing");
  if (factor_cols.empty())
    throw ValidationError(origin + ": no factor columns in header");

  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  std::vector<std::string> blocks;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ValidationError(origin + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(cells.size()));
    std::vector<double> r(factor_cols.size());
    for (std::size_t f = 0; f < factor_cols.size(); ++f)
      r[f] = parse_level(cells[factor_cols[f]], origin, line_no, names[f]);
    rows.push_back(std::move(r));
    ys.push_back(parse_number(cells[y_col], origin, line_no, "y"));
    if (block_col >= 0) {
      if (cells[block_col].empty())
        throw ValidationError(origin + ":" + std::to_string(line_no) +
                              ": column 'block': empty label");
      blocks.push_back(cells[block_col]);
    }
  }
  LoadedDesign out;
  out.factor_names = std::move(names);
  out.table.runs.resize(rows.size(), factor_cols.size());
  out.table.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < factor_cols.size(); ++j)
      out.table.runs(i, j) = rows[i][j];
    out.table.y[i] = ys[i];
  }
  out.table.block = std::move(blocks);
  // A header-only file yields an empty table; consumers that need data
  // validate on use.
  if (!rows.empty()) out.table.validate();
  return out;
}

LoadedDesign read_design_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open design file '" + path + "'");
  return parse_design_csv(in, path);
}

void ExperimentConfig::validate() const {
  if (interaction_order != 2 && interaction_order != 3)
    throw ValidationError("interaction order must be 2 or 3");
  if (criterion != "omd" && criterion != "cmd")
    throw ValidationError("criterion must be 'omd' or 'cmd'");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  if (!(pi > 0.0) || !(pi < 1.0)) throw ValidationError("pi must lie in (0, 1)");
  if (n_star < 1) throw ValidationError("n-star must be at least 1");
  if (top_k < 1) throw ValidationError("top-k must be at least 1");
  if (prob_floor < 0.0 || prob_floor >= 1.0)
    throw ValidationError("prob-floor must lie in [0, 1)");
  if (format != "csv" && format != "json")
    throw ValidationError("format must be 'csv' or 'json'");
  (void)objective_prior(1);
}

ModelSpacePrior ExperimentConfig::objective_prior(int k) const {
  const auto colon = prior_spec.find(':');
  const std::string kind = prior_spec.substr(0, colon);
  const std::string args =
      colon == std::string::npos ? "" : prior_spec.substr(colon + 1);
  if (kind == "beta") {
    const auto comma = args.find(',');
    if (comma == std::string::npos)
      throw ValidationError("prior 'beta' needs two parameters, e.g. beta:1,1");
    try {
      const double a = std::stod(args.substr(0, comma));
      const double b = std::stod(args.substr(comma + 1));
      return ModelSpacePrior::beta_binomial(a, b, k);
    } catch (const std::invalid_argument&) {
      throw ValidationError("cannot parse beta prior parameters '" + args + "'");
    }
  }
  if (kind == "pi") {
    try {
      return ModelSpacePrior::fixed_pi(std::stod(args), k);
    } catch (const std::invalid_argument&) {
      throw ValidationError("cannot parse pi prior parameter '" + args + "'");
    }
  }
  throw ValidationError("unknown prior '" + prior_spec +
                        "', expected beta:a,b or pi:v");
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    try {
      if (key == "order")
        config.interaction_order = std::stoi(value);
      else if (key == "prior")
        config.prior_spec = value;
      else if (key == "criterion")
        config.criterion = value;
      else if (key == "gamma")
        config.gamma = std::stod(value);
      else if (key == "pi")
        config.pi = std::stod(value);
      else if (key == "n_star")
        config.n_star = std::stoi(value);
      else if (key == "top_k")
        config.top_k = std::stoi(value);
      else if (key == "prob_floor")
        config.prob_floor = std::stod(value);
      else if (key == "block")
        config.with_block = (value == "true" || value == "1");
      else if (key == "exchange")
        config.exchange = (value == "true" || value == "1");
      else if (key == "seed")
        config.seed = std::stoull(value);
      else if (key == "out")
        config.out_dir = value;
      else if (key == "format")
        config.format = value;
      else
        throw ValidationError(path + ":" + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": cannot parse value '" + value + "' for key '" +
                            key + "'");
    }
  }
}

void write_posterior_csv(std::ostream& out,
                         const std::vector<EnumeratedModel>& models,
                         const ModelPosterior& post,
                         const std::vector<std::string>& names) {
  out << "model,f,t,prior_odds,log_bf,posterior_prob\n";
  for (std::size_t i : posterior_order(post)) {
    const auto& e = post.entries[i];
    out << models[i].model.label(names) << "," << models[i].model.f() << ","
        << models[i].model.t() << "," << format_double(e.prior_odds, 6) << ","
        << format_double(e.log_bf, 6) << "," << format_double(e.prob, 2) << "\n";
  }
}

void write_posterior_json(std::ostream& out,
                          const std::vector<EnumeratedModel>& models,
                          const ModelPosterior& post,
                          const std::vector<std::string>& names) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (std::size_t i : posterior_order(post)) {
    const auto& e = post.entries[i];
    nlohmann::ordered_json row;
    row["model"] = models[i].model.label(names);
    row["f"] = models[i].model.f();
    row["t"] = models[i].model.t();
    row["prior_odds"] = rounded(e.prior_odds, 6);
    row["log_bf"] = rounded(e.log_bf, 6);
    row["posterior_prob"] = rounded(e.prob, 2);
    if (e.saturated) row["saturated"] = true;
    doc.push_back(std::move(row));
  }
  out << doc.dump(2) << "\n";
}

void write_activity_csv(std::ostream& out, const std::vector<std::string>& names,
                        const std::vector<double>& activity) {
  out << "factor,probability\n";
  for (std::size_t j = 0; j < names.size(); ++j)
    out << names[j] << "," << format_double(activity[j], 2) << "\n";
}

void write_activity_json(std::ostream& out, const std::vector<std::string>& names,
                         const std::vector<double>& activity) {
  nlohmann::ordered_json doc;
  for (std::size_t j = 0; j < names.size(); ++j)
    doc[names[j]] = rounded(activity[j], 2);
  out << doc.dump(2) << "\n";
}

void write_designs_csv(std::ostream& out, const std::vector<CriterionScore>& ranked,
                       const std::string& criterion, int n_star, int models_used) {
  out << "rank,runs,score,criterion,n_star,models_used\n";
  for (std::size_t i = 0; i < ranked.size(); ++i)
    out << i + 1 << "," << runs_string(ranked[i].design.run_indices) << ","
        << format_double(ranked[i].value, 4) << "," << criterion << "," << n_star
        << "," << models_used << "\n";
}

void write_designs_json(std::ostream& out, const std::vector<CriterionScore>& ranked,
                        const std::string& criterion, int n_star, int models_used) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    nlohmann::ordered_json row;
    row["rank"] = i + 1;
    row["runs"] = runs_string(ranked[i].design.run_indices);
    row["score"] = rounded(ranked[i].value, 4);
    row["criterion"] = criterion;
    row["n_star"] = n_star;
    row["models_used"] = models_used;
    doc.push_back(std::move(row));
  }
  out << doc.dump(2) << "\n";
}

void write_candidate_csv(std::ostream& out, const Eigen::MatrixXd& table,
                         const std::vector<std::string>& names) {
  out << "run";
  for (const auto& n : names) out << "," << n;
  out << "\n";
  for (int r = 0; r < table.rows(); ++r) {
    out << r + 1;
    for (int j = 0; j < table.cols(); ++j)
      out << "," << (table(r, j) > 0 ? "+1" : "-1");
    out << "\n";
  }
}

void write_contrasts_csv(std::ostream& out, const std::vector<ContrastEntry>& contrasts,
                         const std::vector<std::string>& names) {
  out << "term,contrast,normal_quantile\n";
  for (const auto& c : contrasts)
    out << term_label(c.term, names) << "," << format_double(c.value, 6) << ","
        << format_double(c.quantile, 6) << "\n";
}

}  // namespace obayes
