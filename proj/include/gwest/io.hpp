// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gwest/harness.hpp"
#include "gwest/mcmc.hpp"
#include "gwest/sampling.hpp"

namespace gwest {

// Shared tree JSON:
//   {"L": int, "nodes": [{"id": int, "parent": int|null,
//                         "children": [int], "observed": bool}]}
// Samples add a top-level "p". Trees are compacted before writing, so a
// write/read cycle is the identity on the file.
std::string tree_to_json(const Tree& t);
Tree tree_from_json(const std::string& text);
void save_tree(const Tree& t, const std::filesystem::path& path);
Tree load_tree(const std::filesystem::path& path);

std::string sample_to_json(const SampleTree& s);
SampleTree sample_from_json(const std::string& text);
void save_sample(const SampleTree& s, const std::filesystem::path& path);
SampleTree load_sample(const std::filesystem::path& path);

// Estimate file: method, theta_hat, objective, and method metadata.
struct EstimateReport {
  std::string method;
  OffspringDistribution theta;
  double objective_value = 0.0;
  std::vector<std::pair<std::string, std::string>> metadata;
};
void save_estimate(const EstimateReport& report,
                   const std::filesystem::path& path);

// results.csv: schema-version header, then
// dataset_id,dist_id,tree_idx,p,sample_idx,estimator,theta_hat,kl,
// se_1..se_W,wall_ms,seed  (theta_hat semicolon-joined).
inline constexpr const char* kResultsSchemaHeader = "# gwest-results v1";
void write_results_header(const std::filesystem::path& path, int width);
void append_result_row(const std::filesystem::path& path,
                       const ResultRow& row);
std::vector<ResultRow> read_results(const std::filesystem::path& path);
// (dataset_id, estimator) pairs already present, for --resume.
std::set<std::pair<std::string, std::string>> completed_keys(
    const std::filesystem::path& path);

void write_aggregates(const std::filesystem::path& path,
                      std::span<const AggregateRow> rows);

// Chain trace export: step, census entries, log g.
void write_chain_trace(const std::filesystem::path& path,
                       const ChainResult& result, std::int64_t burn_in,
                       std::int64_t thin);

// Experiment spec file (JSON). Named distributions: "theta" (inline
// vector), "trunc-poisson" (lambda, W), "zipf" (alpha, W), "uniform" (W).
ExperimentSpec experiment_spec_from_json(const std::string& text);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

}  // namespace gwest
