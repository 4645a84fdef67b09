#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "report.hpp"

namespace matchlab::cli {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  std::string log_level = "info";

  RunInfo run_info() const { return {threads, log_level}; }
};

struct SynthArgs {
  std::string config;  // optional JSON file
  std::string out_dir;
};

struct ProjectArgs {
  std::string init;
  std::string init_restricted;
  int levels = 18;
  std::string target;
  int toy_outputs = 64;
  std::optional<std::uint64_t> toy_seed;
  double lambda = 0.1;
  double step_size = 1.0;
  int max_iters = 1000;
  double grad_tolerance = 1e-8;
  std::vector<double> sweep;
  std::string out;
  std::string trace_out;
  std::string report;
};

struct MatchArgs {
  std::string manifest;
  std::optional<double> facerec_threshold;
  bool require_references = false;
  bool require_default_attrs = false;
  std::optional<std::size_t> pairs;
  std::string out;
};

struct PropensityArgs {
  std::string manifest;
  double caliper = 0.1;
  int folds = 5;
  double l2 = 1e-4;
  bool cv_scores = false;
  std::optional<double> facerec_threshold;
  bool require_references = false;
  bool require_default_attrs = false;
  std::string out;
  std::string scores_out;
};

struct BalanceArgs {
  std::string manifest;
  std::string matches;
  std::string out;
  std::string plot_data;
  std::vector<std::string> intersectional;
  std::size_t knn = 0;
  std::string knn_metric = "gan";
  double knn_threshold = 0.6;
};

struct DisentangleArgs {
  std::string latents;
  std::string attrs;
  std::string kind = "linear";
  double lambda = 0.1;
  std::vector<double> sweep;
  int hidden = 100;
  int max_iters = 2000;
  double train_fraction = 0.7;
  bool squared_mse = false;
  bool gram_schmidt = false;
  std::vector<std::string> priors;  // "i,j,rho"
  std::string out;
  std::string report;
};

struct BenchmarkArgs {
  std::string manifest;
  std::string matches;
  std::vector<std::string> embeddings;
  std::string distance = "euclidean";
  int focus_group = 0;
  bool baseline = false;
  std::string out;
};

int run_synth(const SynthArgs& o, const Globals& g);
int run_project(const ProjectArgs& o, const Globals& g);
int run_match(const MatchArgs& o, const Globals& g);
int run_propensity(const PropensityArgs& o, const Globals& g);
int run_balance(const BalanceArgs& o, const Globals& g);
int run_disentangle(const DisentangleArgs& o, const Globals& g);
int run_benchmark(const BenchmarkArgs& o, const Globals& g);

}  // namespace matchlab::cli
