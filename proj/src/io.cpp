// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "gwest/errors.hpp"
#include "gwest/evaluation.hpp"
#include "json.hpp"

namespace gwest {

namespace {

nlohmann::json tree_nodes_json(const Tree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (int v : t.preorder()) {
    nlohmann::json node;
    node["id"] = v;
    if (t.parent(v) == Tree::kNone)
      node["parent"] = nullptr;
    else
      node["parent"] = t.parent(v);
    node["children"] = t.children(v);
    node["observed"] = t.observed(v);
    nodes.push_back(std::move(node));
  }
  return nodes;
}

Tree tree_from_json_value(const nlohmann::json& j) {
  const int height = j.at("L").get<int>();
  Tree t(height);
  const auto& nodes = j.at("nodes");
  if (nodes.empty()) throw std::invalid_argument("tree json: no nodes");

  // First pass: id -> children list; find the root.
  std::map<int, std::vector<int>> children;
  std::map<int, bool> observed;
  int root = Tree::kNone;
  for (const auto& node : nodes) {
    const int id = node.at("id").get<int>();
    children[id] = node.at("children").get<std::vector<int>>();
    observed[id] = node.value("observed", false);
    if (node.at("parent").is_null()) {
      if (root != Tree::kNone)
        throw std::invalid_argument("tree json: multiple roots");
      root = id;
    }
  }
  if (root == Tree::kNone)
    throw std::invalid_argument("tree json: missing root");

  // Rebuild by walking the declared children lists.
  std::map<int, int> remap;
  remap[root] = t.root();
  t.set_observed(t.root(), observed[root]);
  std::vector<int> stack{root};
  std::size_t seen = 1;
  while (!stack.empty()) {
    const int src = stack.back();
    stack.pop_back();
    for (int c : children.at(src)) {
      if (!children.count(c))
        throw std::invalid_argument("tree json: dangling child id");
      if (remap.count(c))
        throw std::invalid_argument("tree json: node with two parents");
      const int node = t.add_child(remap.at(src));
      remap[c] = node;
      t.set_observed(node, observed[c]);
      ++seen;
      stack.push_back(c);
    }
  }
  if (seen != nodes.size())
    throw std::invalid_argument("tree json: unreachable nodes");
  t.compact();
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string join_semicolon(std::span<const double> xs) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ';';
    out << xs[i];
  }
  return out.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

std::string tree_to_json(const Tree& t) {
  Tree copy = t;
  copy.compact();
  nlohmann::json j;
  j["L"] = copy.height();
  j["nodes"] = tree_nodes_json(copy);
  return j.dump();
}

Tree tree_from_json(const std::string& text) {
  return tree_from_json_value(nlohmann::json::parse(text));
}

void save_tree(const Tree& t, const std::filesystem::path& path) {
  write_file(path, tree_to_json(t) + "\n");
}

Tree load_tree(const std::filesystem::path& path) {
  return tree_from_json(read_file(path));
}

std::string sample_to_json(const SampleTree& s) {
  Tree copy = s.tree;
  copy.compact();
  nlohmann::json j;
  j["L"] = copy.height();
  j["p"] = s.p;
  j["nodes"] = tree_nodes_json(copy);
  return j.dump();
}

SampleTree sample_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SampleTree s{tree_from_json_value(j), j.at("p").get<double>()};
  s.validate();
  return s;
}

void save_sample(const SampleTree& s, const std::filesystem::path& path) {
  write_file(path, sample_to_json(s) + "\n");
}

SampleTree load_sample(const std::filesystem::path& path) {
  return sample_from_json(read_file(path));
}

void save_estimate(const EstimateReport& report,
                   const std::filesystem::path& path) {
  nlohmann::json j;
  j["method"] = report.method;
  j["W"] = report.theta.width();
  j["theta_hat"] = report.theta.probs;
  j["objective"] = report.objective_value;
  nlohmann::json meta;
  for (const auto& [k, v] : report.metadata) meta[k] = v;
  j["metadata"] = std::move(meta);
  write_file(path, j.dump(2) + "\n");
}

void write_results_header(const std::filesystem::path& path, int width) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kResultsSchemaHeader << "\n";
  out << "dataset_id,dist_id,tree_idx,p,sample_idx,estimator,theta_hat,kl";
  for (int i = 1; i <= width; ++i) out << ",se_" << i;
  out << ",wall_ms,seed\n";
}

void append_result_row(const std::filesystem::path& path,
                       const ResultRow& row) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  out << row.dataset_id << ',' << row.dist_id << ',' << row.tree_idx << ','
      << row.p << ',' << row.sample_idx << ',' << row.estimator << ','
      << join_semicolon(row.theta_hat) << ',' << row.kl;
  for (double se : row.squared_errors) out << ',' << se;
  out << ',' << row.wall_ms << ',' << row.seed << "\n";
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsSchemaHeader)
    throw InconsistentInputError("results file: unknown schema header");
  if (!std::getline(in, line))
    throw InconsistentInputError("results file: missing column header");
  const std::size_t columns = split(line, ',').size();
  const std::size_t width = columns - 10;  // fixed columns either side

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    if (parts.size() != columns)
      throw InconsistentInputError("results file: ragged row");
    ResultRow row;
    row.dataset_id = parts[0];
    row.dist_id = parts[1];
    row.tree_idx = std::stoi(parts[2]);
    row.p = std::stod(parts[3]);
    row.sample_idx = std::stoi(parts[4]);
    row.estimator = parts[5];
    for (const auto& v : split(parts[6], ';'))
      row.theta_hat.push_back(std::stod(v));
    row.kl = std::stod(parts[7]);
    for (std::size_t i = 0; i < width; ++i)
      row.squared_errors.push_back(std::stod(parts[8 + i]));
    row.wall_ms = std::stod(parts[8 + width]);
    row.seed = std::stoull(parts[9 + width]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::set<std::pair<std::string, std::string>> completed_keys(
    const std::filesystem::path& path) {
  std::set<std::pair<std::string, std::string>> keys;
  if (!std::filesystem::exists(path)) return keys;
  for (const auto& row : read_results(path))
    keys.emplace(row.dataset_id, row.estimator);
  return keys;
}

void write_aggregates(const std::filesystem::path& path,
                      std::span<const AggregateRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "dist_id,p,estimator,parameter,n,min,q1,median,q3,max\n";
  for (const auto& r : rows) {
    out << r.dist_id << ',' << r.p << ',' << r.estimator << ',' << r.parameter
        << ',' << r.n << ',' << r.min << ',' << r.q1 << ',' << r.median << ','
        << r.q3 << ',' << r.max << "\n";
  }
}

void write_chain_trace(const std::filesystem::path& path,
                       const ChainResult& result, std::int64_t burn_in,
                       std::int64_t thin) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  const int width =
      result.samples.empty() ? 0 : result.samples.front().census.width();
  out << "step";
  for (int i = 1; i <= width; ++i) out << ",c_" << i;
  out << ",log_g\n";
  for (std::size_t i = 0; i < result.samples.size(); ++i) {
    const std::int64_t step = burn_in + static_cast<std::int64_t>(i + 1) * thin;
    out << step;
    for (std::int64_t c : result.samples[i].census.counts) out << ',' << c;
    out << ',' << result.log_g_trace[i] << "\n";
  }
}

ExperimentSpec experiment_spec_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentSpec spec;
  spec.height = j.at("L").get<int>();
  spec.p_grid = j.at("p_grid").get<std::vector<double>>();
  spec.trees_per_distribution = j.value("trees_per_distribution", 10);
  spec.samples_per_pair = j.value("samples_per_pair", 10);
  spec.estimators = j.at("estimators").get<std::vector<std::string>>();
  spec.master_seed = j.value("master_seed", std::uint64_t{1});
  spec.threads = j.value("threads", 0);
  spec.mcmc_theta0 = j.value("mcmc_theta0", std::string("uniform"));
  spec.theta0_levels = j.value("theta0_levels", 2);

  for (const auto& jd : j.at("distributions")) {
    DistributionSpec d;
    d.id = jd.at("id").get<std::string>();
    const std::string kind = jd.value("kind", std::string("theta"));
    if (kind == "theta") {
      d.theta.probs = jd.at("theta").get<std::vector<double>>();
    } else if (kind == "trunc-poisson") {
      d.theta = truncated_poisson(jd.at("lambda").get<double>(),
                                  jd.at("W").get<int>());
    } else if (kind == "zipf") {
      d.theta = zipf(jd.at("alpha").get<double>(), jd.at("W").get<int>());
    } else if (kind == "uniform") {
      d.theta = uniform_offspring(jd.at("W").get<int>());
    } else {
      throw std::invalid_argument("experiment spec: unknown kind " + kind);
    }
    spec.distributions.push_back(std::move(d));
  }

  if (j.contains("exact")) {
    const auto& je = j["exact"];
    spec.exact.maximize.starts = je.value("starts", 10000);
    spec.exact.maximize.box_half_width = je.value("box", 10.0);
    spec.exact.maximize.refine_top = je.value("refine_top", 0);
    spec.exact.maximize.optimizer.max_iterations = je.value("max_iterations", 100);
    spec.exact.maximize.optimizer.rel_tol = je.value("rel_tol", 1e-8);
    spec.exact.maximize.optimizer.initial_step = je.value("step", 1e-3);
    spec.exact.catalog_budget =
        je.value("catalog_budget", NonIsoCatalog::kDefaultBudget);
    if (je.contains("catalog_dir"))
      spec.exact.catalog_dir = je["catalog_dir"].get<std::string>();
  }
  if (j.contains("mcmc")) {
    const auto& jm = j["mcmc"];
    spec.mcmc.burn_in = jm.value("burn_in", std::int64_t{-1});
    spec.mcmc.total = jm.value("total", std::int64_t{-1});
    spec.mcmc.thin = jm.value("thin", std::int64_t{-1});
    spec.mcmc.pilot = jm.value("pilot", std::int64_t{10000});
    spec.mcmc.max_total = jm.value("max_total", std::int64_t{500000});
    spec.mcmc.rl_quantile = jm.value("rl_q", 0.025);
    spec.mcmc.rl_tolerance = jm.value("rl_r", 0.005);
    spec.mcmc.rl_confidence = jm.value("rl_s", 0.95);
    spec.mcmc.maximize.starts = jm.value("starts", 10000);
    spec.mcmc.maximize.box_half_width = jm.value("box", 10.0);
    spec.mcmc.maximize.refine_top = jm.value("refine_top", 0);
    if (jm.contains("theta0"))
      spec.mcmc.theta0.probs = jm["theta0"].get<std::vector<double>>();
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  return experiment_spec_from_json(read_file(path));
}

}  // namespace gwest
