#include "app.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "matchlab/error.hpp"

namespace matchlab::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

/// Applies the requested level (or MATCHLAB_LOG) and returns the effective one.
std::string configure_logging(const std::string& requested) {
  auto logger = spdlog::get("matchlab");
  if (!logger) {
    logger = spdlog::stderr_color_mt("matchlab");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  }
  std::string level = requested;
  if (const char* env = std::getenv("MATCHLAB_LOG"); env && *env) level = env;
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && level != "off") {
    throw Error(ErrorCode::InvalidArgument, "unknown log level: " + level);
  }
  logger->set_level(parsed);
  return level;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Matched sample selection, propensity matching, balance diagnostics and attribute disentanglement"};
  app.name("matchlab");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every randomized step")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for parallel stages")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off (MATCHLAB_LOG overrides)")
      ->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic confounded dataset");
  synth_cmd->add_option("--config", synth.config, "JSON generator config");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  ProjectArgs proj;
  auto* proj_cmd = app.add_subcommand("project", "Regularized projection with the linear toy forward model");
  proj_cmd->add_option("--init", proj.init, "Initial expanded code (MLAT or CSV)");
  proj_cmd->add_option("--init-restricted", proj.init_restricted, "Single-row CSV broadcast to every level");
  proj_cmd->add_option("--levels", proj.levels, "Levels for --init-restricted")->capture_default_str();
  proj_cmd->add_option("--target", proj.target, "Reachable target code (MLAT or CSV)")->required();
  proj_cmd->add_option("--toy-outputs", proj.toy_outputs, "Output dimension P of the toy model")->capture_default_str();
  proj_cmd->add_option("--toy-seed", proj.toy_seed, "Toy generator seed (defaults to --seed)");
  proj_cmd->add_option("--lambda", proj.lambda, "Deviation penalty weight")->capture_default_str();
  proj_cmd->add_option("--step-size", proj.step_size)->capture_default_str();
  proj_cmd->add_option("--max-iters", proj.max_iters)->capture_default_str();
  proj_cmd->add_option("--grad-tolerance", proj.grad_tolerance)->capture_default_str();
  proj_cmd->add_option("--sweep", proj.sweep, "Comma-separated lambdas summarized in the report")->delimiter(',');
  proj_cmd->add_option("--out", proj.out, "Projected code (.csv for CSV, MLAT otherwise)");
  proj_cmd->add_option("--trace-out", proj.trace_out, "Objective trace CSV");
  proj_cmd->add_option("--report", proj.report, "JSON report");

  MatchArgs match;
  auto* match_cmd = app.add_subcommand("match", "Greedy GAN-distance matching");
  match_cmd->add_option("--manifest", match.manifest)->required();
  match_cmd->add_option("--facerec-threshold", match.facerec_threshold, "Recognition-distance caliper (e.g. 0.6)");
  match_cmd->add_flag("--require-references", match.require_references);
  match_cmd->add_flag("--require-default-attrs", match.require_default_attrs);
  match_cmd->add_option("--pairs", match.pairs, "Stop after this many pairs");
  match_cmd->add_option("--out", match.out)->required();

  PropensityArgs prop;
  auto* prop_cmd = app.add_subcommand("propensity", "Logistic propensity scores and caliper matching");
  prop_cmd->add_option("--manifest", prop.manifest)->required();
  prop_cmd->add_option("--caliper", prop.caliper)->capture_default_str();
  prop_cmd->add_option("--folds", prop.folds, "Cross-validation folds (0 skips)")->capture_default_str();
  prop_cmd->add_option("--l2", prop.l2)->capture_default_str();
  prop_cmd->add_flag("--cv-scores", prop.cv_scores, "Match on out-of-fold scores");
  prop_cmd->add_option("--facerec-threshold", prop.facerec_threshold);
  prop_cmd->add_flag("--require-references", prop.require_references);
  prop_cmd->add_flag("--require-default-attrs", prop.require_default_attrs);
  prop_cmd->add_option("--out", prop.out)->required();
  prop_cmd->add_option("--scores-out", prop.scores_out, "CSV of sample_id,score");

  BalanceArgs bal;
  auto* bal_cmd = app.add_subcommand("balance", "Covariate balance before and after matching");
  bal_cmd->add_option("--manifest", bal.manifest)->required();
  bal_cmd->add_option("--matches", bal.matches)->required();
  bal_cmd->add_option("--out", bal.out)->required();
  bal_cmd->add_option("--plot-data", bal.plot_data, "Tidy CSV: covariate,group,stage,mean,lo,hi");
  bal_cmd->add_option("--intersectional", bal.intersectional, "Up to 4 binary covariates")->delimiter(',');
  bal_cmd->add_option("--knn", bal.knn, "k for nearest-neighbor attribute errors (0 skips)")->capture_default_str();
  bal_cmd->add_option("--knn-metric", bal.knn_metric)
      ->capture_default_str()
      ->check(CLI::IsMember({"gan", "facerec", "combined"}));
  bal_cmd->add_option("--knn-threshold", bal.knn_threshold)->capture_default_str();

  DisentangleArgs dis;
  auto* dis_cmd = app.add_subcommand("disentangle", "Train correlation-penalized attribute mappers");
  dis_cmd->add_option("--latents", dis.latents, "N x N_Z CSV")->required();
  dis_cmd->add_option("--attrs", dis.attrs, "N x N_A CSV, optional header")->required();
  dis_cmd->add_option("--kind", dis.kind)->capture_default_str()->check(CLI::IsMember({"linear", "mlp"}));
  dis_cmd->add_option("--lambda", dis.lambda)->capture_default_str();
  dis_cmd->add_option("--sweep", dis.sweep, "Comma-separated lambdas (overrides --lambda)")->delimiter(',');
  dis_cmd->add_option("--hidden", dis.hidden)->capture_default_str();
  dis_cmd->add_option("--max-iters", dis.max_iters)->capture_default_str();
  dis_cmd->add_option("--train-fraction", dis.train_fraction)->capture_default_str();
  dis_cmd->add_flag("--squared-mse", dis.squared_mse, "Use the squared Frobenius fit term");
  dis_cmd->add_flag("--gram-schmidt", dis.gram_schmidt, "Also evaluate the orthogonalized linear mapper");
  dis_cmd->add_option("--prior", dis.priors, "Target correlation i,j,rho (repeatable)");
  dis_cmd->add_option("--out", dis.out, "metrics CSV")->required();
  dis_cmd->add_option("--report", dis.report, "JSON report");

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Per-group same-identity embedding distance gaps");
  bench_cmd->add_option("--manifest", bench.manifest)->required();
  bench_cmd->add_option("--matches", bench.matches)->required();
  bench_cmd->add_option("--embeddings", bench.embeddings, "Embedding CSVs (default: manifest recognition vectors)");
  bench_cmd->add_option("--distance", bench.distance)
      ->capture_default_str()
      ->check(CLI::IsMember({"euclidean", "cosine"}));
  bench_cmd->add_option("--focus-group", bench.focus_group, "difference = mean(focus) - mean(other)")
      ->capture_default_str()
      ->check(CLI::Range(0, 1));
  bench_cmd->add_flag("--baseline", bench.baseline, "Add the seeded unmatched baseline");
  bench_cmd->add_option("--out", bench.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, std::cout, std::cerr);
    if (app.get_subcommands().empty() && !app.remaining().empty()) {
      std::cerr << "matchlab: unknown subcommand '" << app.remaining().front() << "'\n" << app.help();
      return kExitValidation;
    }
    app.exit(e, std::cout, std::cerr);
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return kExitValidation;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    g.log_level = configure_logging(g.log_level);
    if (synth_cmd->parsed()) return run_synth(synth, g);
    if (proj_cmd->parsed()) return run_project(proj, g);
    if (match_cmd->parsed()) return run_match(match, g);
    if (prop_cmd->parsed()) return run_propensity(prop, g);
    if (bal_cmd->parsed()) return run_balance(bal, g);
    if (dis_cmd->parsed()) return run_disentangle(dis, g);
    if (bench_cmd->parsed()) return run_benchmark(bench, g);
  } catch (const Error& e) {
    std::cerr << "matchlab: " << e.what() << '\n';
    return e.code() == ErrorCode::IoError ? kExitIo : kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "matchlab: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "matchlab: " << e.what() << '\n';
    return kExitValidation;
  }
  std::cerr << app.help();
  return kExitValidation;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"matchlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace matchlab::cli
