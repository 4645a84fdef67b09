#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "matchlab/balance.hpp"
#include "matchlab/benchmark.hpp"
#include "matchlab/dataset.hpp"
#include "matchlab/disentangle.hpp"
#include "matchlab/error.hpp"
#include "matchlab/io.hpp"
#include "matchlab/latent.hpp"
#include "matchlab/matching.hpp"
#include "matchlab/propensity.hpp"
#include "matchlab/synth.hpp"

namespace fs = std::filesystem;

namespace matchlab::cli {
namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

bool is_number(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

/// Numeric CSV with an optional header row; returns the header (possibly empty).
Eigen::MatrixXd read_table(const std::string& path, std::vector<std::string>* header) {
  auto rows = io::read_csv(path);
  if (rows.empty()) throw Error(ErrorCode::ShapeError, path + ": no rows");
  if (!rows.front().empty() && !is_number(rows.front().front())) {
    if (header) *header = rows.front();
    rows.erase(rows.begin());
  }
  return io::parse_matrix(rows, path);
}

// --- synth -----------------------------------------------------------------

const std::set<std::string> kSynthKeys = {
    "n", "levels", "dims", "n_attrs", "attr_corr", "confounder_strength", "noise_sd", "seed", "level_sd",
    "identity_share", "treatment_index", "n_binary_covariates", "n_real_covariates", "covariate_noise_sd",
    "facerec_dim", "facerec_same_distance", "facerec_diff_distance", "default_attrs_rate", "embeddings"};

const std::set<std::string> kEmbeddingKeys = {"name", "dim", "base_distance", "delta", "focus_group", "jitter_sd",
                                              "center_sd"};

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

struct SynthPlan {
  SynthConfig cfg;
  std::vector<EmbeddingSynthConfig> embeddings;
};

SynthPlan parse_synth_config(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "synth config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kSynthKeys.count(key)) throw Error(ErrorCode::InvalidArgument, "unknown synth config key: " + key);
  }
  SynthPlan plan;
  auto& c = plan.cfg;
  try {
    take(j, "n", c.n);
    take(j, "levels", c.levels);
    take(j, "dims", c.dims);
    take(j, "n_attrs", c.n_attrs);
    take(j, "confounder_strength", c.confounder_strength);
    take(j, "noise_sd", c.noise_sd);
    take(j, "seed", c.seed);
    take(j, "level_sd", c.level_sd);
    take(j, "identity_share", c.identity_share);
    take(j, "treatment_index", c.treatment_index);
    take(j, "n_binary_covariates", c.n_binary_covariates);
    take(j, "n_real_covariates", c.n_real_covariates);
    take(j, "covariate_noise_sd", c.covariate_noise_sd);
    take(j, "facerec_dim", c.facerec_dim);
    take(j, "facerec_same_distance", c.facerec_same_distance);
    take(j, "facerec_diff_distance", c.facerec_diff_distance);
    take(j, "default_attrs_rate", c.default_attrs_rate);
    if (j.contains("attr_corr") && !j["attr_corr"].is_null()) {
      const auto rows = j["attr_corr"].get<std::vector<std::vector<double>>>();
      c.attr_corr.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw Error(ErrorCode::InvalidArgument, "attr_corr must be square");
        for (std::size_t k = 0; k < rows.size(); ++k) c.attr_corr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
      }
    }
    if (j.contains("embeddings")) {
      for (const auto& e : j["embeddings"]) {
        for (const auto& [key, value] : e.items()) {
          if (!kEmbeddingKeys.count(key)) throw Error(ErrorCode::InvalidArgument, "unknown embedding key: " + key);
        }
        EmbeddingSynthConfig ec;
        take(e, "name", ec.model_name);
        take(e, "dim", ec.dim);
        take(e, "base_distance", ec.base_distance);
        take(e, "delta", ec.delta);
        take(e, "focus_group", ec.focus_group);
        take(e, "jitter_sd", ec.jitter_sd);
        take(e, "center_sd", ec.center_sd);
        plan.embeddings.push_back(ec);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("synth config: ") + e.what());
  }
  return plan;
}

json synth_config_json(const SynthPlan& plan) {
  const auto& c = plan.cfg;
  json emb = json::array();
  for (const auto& e : plan.embeddings) {
    emb.push_back({{"name", e.model_name}, {"dim", e.dim}, {"base_distance", e.base_distance}, {"delta", e.delta},
                   {"focus_group", e.focus_group}, {"jitter_sd", e.jitter_sd}, {"center_sd", e.center_sd},
                   {"seed", e.seed}});
  }
  return {{"n", c.n},
          {"levels", c.levels},
          {"dims", c.dims},
          {"n_attrs", c.n_attrs},
          {"attr_corr", matrix_json(c.resolved_corr())},
          {"confounder_strength", c.confounder_strength},
          {"noise_sd", c.noise_sd},
          {"seed", c.seed},
          {"level_sd", c.level_sd},
          {"identity_share", c.identity_share},
          {"treatment_index", c.treatment_index},
          {"n_binary_covariates", c.n_binary_covariates},
          {"n_real_covariates", c.n_real_covariates},
          {"covariate_noise_sd", c.covariate_noise_sd},
          {"facerec_dim", c.facerec_dim},
          {"facerec_same_distance", c.facerec_same_distance},
          {"facerec_diff_distance", c.facerec_diff_distance},
          {"default_attrs_rate", c.default_attrs_rate},
          {"embeddings", emb}};
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out + '\n';
}

// --- shared helpers ----------------------------------------------------------

MatchConstraints constraints_from(std::optional<double> threshold, bool refs, bool default_attrs) {
  MatchConstraints c;
  c.facerec_threshold = threshold;
  c.require_references = refs;
  c.require_default_attrs = default_attrs;
  validate(c);
  return c;
}

json constraints_json(const MatchConstraints& c) {
  return {{"facerec_threshold", optional_number(c.facerec_threshold)},
          {"require_references", c.require_references},
          {"require_default_attrs", c.require_default_attrs}};
}

json group_stats_json(const GroupStats& s) {
  return {{"mean0", s.mean0}, {"mean1", s.mean1}, {"ci0", interval_json(s.ci0)}, {"ci1", interval_json(s.ci1)},
          {"gap", s.gap},     {"n0", s.n0},       {"n1", s.n1}};
}

json intersectional_json(const IntersectionalReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"values", c.values},
                     {"count0", c.count0},
                     {"count1", c.count1},
                     {"proportion0", c.proportion0},
                     {"proportion1", c.proportion1},
                     {"ci0", interval_json(c.ci0)},
                     {"ci1", interval_json(c.ci1)}});
  }
  return {{"n0", r.n0}, {"n1", r.n1}, {"cells", cells}};
}

double mean_score_gap(const std::map<std::string, double>& scores, const Dataset& ds,
                      const std::vector<std::string>& ids) {
  std::vector<double> s0;
  std::vector<double> s1;
  for (const auto& id : ids) (ds.at(id).attribute == 0 ? s0 : s1).push_back(scores.at(id));
  if (s0.empty() || s1.empty()) return std::numeric_limits<double>::quiet_NaN();
  return mean_sem(s1).mean - mean_sem(s0).mean;
}

std::vector<std::string> all_ids(const Dataset& ds) {
  std::vector<std::string> ids;
  for (const auto& s : ds.samples()) ids.push_back(s.sample_id);
  return ids;
}

json split_json(const SplitMetrics& m, const std::vector<std::string>& names) {
  json pearson = json::object();
  json spearman = json::object();
  for (std::size_t k = 0; k < names.size(); ++k) {
    pearson[names[k]] = number_or_null(m.pearson[k]);
    spearman[names[k]] = number_or_null(m.spearman[k]);
  }
  return {{"mse", m.mse}, {"mean_abs_corr", number_or_null(m.mean_abs_corr)}, {"pearson", pearson},
          {"spearman", spearman}};
}

std::vector<std::string> metrics_row(double lambda, const std::string& split, const SplitMetrics& m) {
  std::vector<std::string> row = {io::format_double(lambda), split, io::format_double(m.mse),
                                  io::format_double(m.mean_abs_corr)};
  for (double v : m.pearson) row.push_back(io::format_double(v));
  for (double v : m.spearman) row.push_back(io::format_double(v));
  return row;
}

CorrelationTarget parse_prior(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= spec.size(); ++i) {
    if (i == spec.size() || spec[i] == ',') {
      parts.push_back(spec.substr(start, i - start));
      start = i + 1;
    }
  }
  if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "--prior expects i,j,rho but got " + spec);
  CorrelationTarget t;
  t.i = static_cast<int>(io::parse_int(parts[0], "--prior"));
  t.j = static_cast<int>(io::parse_int(parts[1], "--prior"));
  t.rho = io::parse_double(parts[2], "--prior");
  return t;
}

}  // namespace

// --- synth -------------------------------------------------------------------

int run_synth(const SynthArgs& o, const Globals& g) {
  InputHasher inputs;
  SynthPlan plan;
  if (!o.config.empty()) {
    plan = parse_synth_config(read_json(o.config));
    inputs.add(o.config);
  }
  if (g.seed_given) plan.cfg.seed = g.seed;
  for (std::size_t k = 0; k < plan.embeddings.size(); ++k) plan.embeddings[k].seed = plan.cfg.seed + 1 + k;

  spdlog::info("generating {} samples (seed {})", plan.cfg.n, plan.cfg.seed);
  const SynthResult result = generate(plan.cfg);
  const Dataset& ds = result.dataset;
  const fs::path dir = o.out_dir;
  const fs::path manifest = save_dataset(ds, dir);

  io::write_text(dir / "latents.csv", io::format_matrix_csv(result.truth.restricted));
  io::write_text(dir / "attrs.csv",
                 csv_row(result.truth.attributes.names) + io::format_matrix_csv(result.truth.attributes.values));

  std::string truth_csv = "sample_id,true_propensity\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Eigen::VectorXd z = result.truth.restricted.row(static_cast<Eigen::Index>(i)).transpose();
    truth_csv += ds[i].sample_id + ',' + io::format_double(result.truth.propensity(z)) + '\n';
  }
  io::write_text(dir / "propensity_truth.csv", truth_csv);

  json embedding_files = json::array();
  for (const auto& ec : plan.embeddings) {
    const fs::path path = dir / "embeddings" / (ec.model_name + ".csv");
    save_embeddings(synth_embeddings(ds, ec), path.string());
    embedding_files.push_back(fs::relative(path, dir).generic_string());
  }

  const auto [g0, g1] = group_split(ds);
  json doc = envelope("synth", synth_config_json(plan), inputs, g.run_info());
  doc["outputs"] = {{"manifest", fs::relative(manifest, dir).generic_string()},
                    {"latents", "latents.csv"},
                    {"attrs", "attrs.csv"},
                    {"propensity_truth", "propensity_truth.csv"},
                    {"embeddings", embedding_files}};
  doc["summary"] = {{"n", ds.size()}, {"n_identities", ds.identity_index().size()}, {"n0", g0.size()}, {"n1", g1.size()}};
  doc["ground_truth"] = {{"noise_sd", result.truth.noise_sd},
                         {"treatment_direction", vector_json(result.truth.treatment_direction)},
                         {"attr_map", matrix_json(result.truth.attr_map)},
                         {"confounded_covariates", result.truth.confounded_covariates}};
  write_json(dir / "synth.json", doc);
  spdlog::info("wrote {} samples to {}", ds.size(), dir.string());
  return 0;
}

// --- project -----------------------------------------------------------------

int run_project(const ProjectArgs& o, const Globals& g) {
  if (o.init.empty() == o.init_restricted.empty()) {
    throw Error(ErrorCode::InvalidArgument, "exactly one of --init or --init-restricted is required");
  }
  InputHasher inputs;
  LatentCode init;
  if (!o.init.empty()) {
    init = read_latent(o.init);
    inputs.add(o.init);
  } else {
    const Eigen::MatrixXd r = read_table(o.init_restricted, nullptr);
    if (r.rows() != 1) throw Error(ErrorCode::ShapeError, "--init-restricted expects a single row");
    if (o.levels < 1) throw Error(ErrorCode::InvalidArgument, "--levels must be positive");
    init = LatentCode::broadcast(r.row(0).transpose(), o.levels);
    inputs.add(o.init_restricted);
  }
  const LatentCode target = read_latent(o.target);
  inputs.add(o.target);
  if (target.levels() != init.levels() || target.dims() != init.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "target and initial code differ in shape");
  }
  if (o.toy_outputs < 1) throw Error(ErrorCode::InvalidArgument, "--toy-outputs must be positive");
  const std::uint64_t toy_seed = o.toy_seed.value_or(g.seed);
  const auto model = LinearToyModel::random(init.levels(), init.dims(), o.toy_outputs, target, toy_seed);

  ProjectionConfig pc;
  pc.lambda = o.lambda;
  pc.step_size = o.step_size;
  pc.max_iters = o.max_iters;
  pc.grad_tolerance = o.grad_tolerance;

  auto summarize = [&](const ProjectionResult& r, double lambda) {
    const auto ev = model.evaluate(r.code.expanded());
    return json{{"lambda", lambda},
                {"initial_objective", r.trace.front()},
                {"final_objective", r.trace.back()},
                {"loss", ev.loss},
                {"deviation_penalty", deviation_penalty(r.code)},
                {"iterations", r.iterations},
                {"converged", r.converged}};
  };

  spdlog::info("projecting {}x{} code, lambda {}", init.levels(), init.dims(), o.lambda);
  const ProjectionResult result = project(model, init, pc);
  if (!o.out.empty()) {
    if (fs::path(o.out).extension() == ".csv") {
      write_latent_csv(o.out, result.code);
    } else {
      write_latent(o.out, result.code);
    }
  }
  if (!o.trace_out.empty()) {
    std::string csv = "iteration,objective\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
      csv += std::to_string(i) + ',' + io::format_double(result.trace[i]) + '\n';
    }
    io::write_text(o.trace_out, csv);
  }

  json sweep = json::array();
  for (double lambda : o.sweep) {
    ProjectionConfig sc = pc;
    sc.lambda = lambda;
    sweep.push_back(summarize(project(model, init, sc), lambda));
  }
  if (!o.report.empty()) {
    json config = {{"init", o.init.empty() ? json(nullptr) : json(o.init)},
                   {"init_restricted", o.init_restricted.empty() ? json(nullptr) : json(o.init_restricted)},
                   {"levels", init.levels()},
                   {"dims", init.dims()},
                   {"target", o.target},
                   {"toy_outputs", o.toy_outputs},
                   {"toy_seed", toy_seed},
                   {"lambda", o.lambda},
                   {"step_size", o.step_size},
                   {"max_iters", o.max_iters},
                   {"grad_tolerance", o.grad_tolerance},
                   {"sweep", o.sweep}};
    json doc = envelope("project", std::move(config), inputs, g.run_info());
    doc["result"] = summarize(result, o.lambda);
    doc["sweep"] = std::move(sweep);
    write_json(o.report, doc);
  }
  return 0;
}

// --- match ---------------------------------------------------------------------

int run_match(const MatchArgs& o, const Globals& g) {
  const MatchConstraints c = constraints_from(o.facerec_threshold, o.require_references, o.require_default_attrs);
  if (o.pairs && *o.pairs == 0) throw Error(ErrorCode::InvalidArgument, "--pairs must be positive");
  InputHasher inputs;
  inputs.add_manifest(o.manifest);
  const Dataset ds = load_dataset(o.manifest);
  spdlog::info("loaded {} samples from {}", ds.size(), o.manifest);

  GreedyOptions opt;
  opt.n_pairs = o.pairs;
  opt.threads = g.threads;
  const MatchSet ms = greedy_match(ds, c, opt);
  validate_match_set(ms, ds);
  spdlog::info("accepted {} pairs", ms.size());

  json config = {{"manifest", o.manifest}, {"constraints", constraints_json(c)},
                 {"pairs", o.pairs ? json(*o.pairs) : json(nullptr)}};
  json doc = envelope("match", std::move(config), inputs, g.run_info());
  doc["matches"] = to_json(ms);
  write_json(o.out, doc);
  return 0;
}

// --- propensity ----------------------------------------------------------------

int run_propensity(const PropensityArgs& o, const Globals& g) {
  const MatchConstraints c = constraints_from(o.facerec_threshold, o.require_references, o.require_default_attrs);
  if (o.cv_scores && o.folds < 2) throw Error(ErrorCode::InvalidArgument, "--cv-scores needs --folds >= 2");
  InputHasher inputs;
  inputs.add_manifest(o.manifest);
  const Dataset ds = load_dataset(o.manifest);

  const Eigen::MatrixXd x = restricted_features(ds);
  const std::vector<int> y = attribute_labels(ds);
  LogisticConfig lc;
  lc.l2 = o.l2;
  const PropensityModel model = fit_logistic(x, y, lc);

  json cv_json = nullptr;
  std::map<std::string, double> scores = propensity_scores(model, ds);
  if (o.folds >= 2) {
    const CrossValidation cv = cross_validate(x, y, o.folds, lc, g.seed);
    cv_json = {{"folds", o.folds}, {"mean_accuracy", cv.mean_accuracy}, {"fold_accuracy", cv.fold_accuracy}};
    spdlog::info("{}-fold accuracy {:.4f}", o.folds, cv.mean_accuracy);
    if (o.cv_scores) {
      for (std::size_t i = 0; i < ds.size(); ++i) scores[ds[i].sample_id] = cv.out_of_fold_scores[static_cast<Eigen::Index>(i)];
    }
  }

  CaliperConfig cc;
  cc.caliper = o.caliper;
  cc.seed = g.seed;
  cc.constraints = c;
  const MatchSet ms = caliper_match(scores, ds, cc);
  validate_match_set(ms, ds, false);
  spdlog::info("accepted {} caliper pairs", ms.size());

  if (!o.scores_out.empty()) {
    std::string csv = "sample_id,score\n";
    for (const auto& s : ds.samples()) csv += s.sample_id + ',' + io::format_double(scores.at(s.sample_id)) + '\n';
    io::write_text(o.scores_out, csv);
  }

  json config = {{"manifest", o.manifest}, {"caliper", o.caliper}, {"seed", g.seed}, {"folds", o.folds},
                 {"l2", o.l2}, {"cv_scores", o.cv_scores}, {"constraints", constraints_json(c)}};
  json doc = envelope("propensity", std::move(config), inputs, g.run_info());
  doc["model"] = {{"weights", vector_json(model.weights)}, {"intercept", model.intercept}, {"l2", model.l2}};
  doc["training_accuracy"] = classification_accuracy(model, x, y);
  doc["cross_validation"] = cv_json;
  doc["score_gap"] = {{"before", number_or_null(mean_score_gap(scores, ds, all_ids(ds)))},
                      {"after", number_or_null(ms.empty() ? std::nan("") : mean_score_gap(scores, ds, ms.members()))}};
  doc["matches"] = to_json(ms);
  write_json(o.out, doc);
  return 0;
}

// --- balance -------------------------------------------------------------------

int run_balance(const BalanceArgs& o, const Globals& g) {
  InputHasher inputs;
  inputs.add_manifest(o.manifest);
  inputs.add_report(o.matches);
  const Dataset ds = load_dataset(o.manifest);
  const MatchSet ms = load_match_set(o.matches);
  validate_match_set(ms, ds, false);

  const BalanceReport report = balance_report(ds, ms);
  json covs = json::array();
  std::string csv = "covariate,group,stage,mean,lo,hi\n";
  for (const auto& cb : report.covariates) {
    covs.push_back({{"name", cb.name},
                    {"kind", cb.kind == CovariateKind::Binary ? "binary" : "real"},
                    {"before", group_stats_json(cb.before)},
                    {"after", group_stats_json(cb.after)},
                    {"gap_reduction", optional_number(cb.gap_reduction)}});
    for (const auto& [stage, st] : {std::pair{"before", &cb.before}, std::pair{"after", &cb.after}}) {
      csv += csv_row({cb.name, "0", stage, io::format_double(st->mean0), io::format_double(st->ci0.lo),
                      io::format_double(st->ci0.hi)});
      csv += csv_row({cb.name, "1", stage, io::format_double(st->mean1), io::format_double(st->ci1.lo),
                      io::format_double(st->ci1.hi)});
    }
  }

  json config = {{"manifest", o.manifest}, {"matches", o.matches}, {"intersectional", o.intersectional},
                 {"knn", o.knn}, {"knn_metric", o.knn_metric}, {"knn_threshold", o.knn_threshold}};
  json doc = envelope("balance", std::move(config), inputs, g.run_info());
  doc["n_pairs"] = ms.size();
  doc["covariates"] = std::move(covs);
  if (!o.intersectional.empty()) {
    doc["intersectional"] = {{"covariates", o.intersectional},
                             {"before", intersectional_json(intersectional_report(ds, o.intersectional))},
                             {"after", intersectional_json(intersectional_report(ds, ms, o.intersectional))}};
  }
  if (o.knn > 0) {
    KnnMetric metric;
    if (o.knn_metric == "gan") {
      metric = KnnMetric::gan();
    } else if (o.knn_metric == "facerec") {
      metric = KnnMetric::facerec();
    } else if (o.knn_metric == "combined") {
      metric = KnnMetric::combined(o.knn_threshold);
    } else {
      throw Error(ErrorCode::InvalidArgument, "--knn-metric must be gan, facerec or combined");
    }
    std::vector<std::string> names;
    for (const auto& spec : ds.covariate_specs()) names.push_back(spec.name);
    json errs = json::array();
    for (const auto& e : knn_attribute_errors(ds, metric, o.knn, names)) {
      errs.push_back({{"name", e.name}, {"kind", e.kind == CovariateKind::Binary ? "binary" : "real"},
                      {"mean", e.mean}, {"sem", e.sem}});
    }
    doc["knn_errors"] = std::move(errs);
  }
  write_json(o.out, doc);
  if (!o.plot_data.empty()) io::write_text(o.plot_data, csv);
  return 0;
}

// --- disentangle ---------------------------------------------------------------

int run_disentangle(const DisentangleArgs& o, const Globals& g) {
  InputHasher inputs;
  inputs.add(o.latents);
  inputs.add(o.attrs);
  const Eigen::MatrixXd z = read_table(o.latents, nullptr);
  AttributeMatrix a;
  a.values = read_table(o.attrs, &a.names);
  if (a.names.empty()) {
    for (Eigen::Index k = 0; k < a.values.cols(); ++k) a.names.push_back("attr" + std::to_string(k));
  }

  TrainConfig tc;
  if (o.kind == "linear") {
    tc.kind = MapperKind::Linear;
  } else if (o.kind == "mlp") {
    tc.kind = MapperKind::Mlp;
  } else {
    throw Error(ErrorCode::InvalidArgument, "--kind must be linear or mlp");
  }
  if (o.gram_schmidt && tc.kind != MapperKind::Linear) {
    throw Error(ErrorCode::InvalidArgument, "--gram-schmidt applies to linear mappers only");
  }
  tc.hidden = o.hidden;
  tc.max_iters = o.max_iters;
  tc.train_fraction = o.train_fraction;
  tc.squared_mse = o.squared_mse;
  tc.seed = g.seed;
  for (const auto& p : o.priors) tc.prior.targets.push_back(parse_prior(p));

  std::vector<double> lambdas = o.sweep.empty() ? std::vector<double>{o.lambda} : o.sweep;
  std::vector<std::string> header = {"lambda", "split", "mse", "mean_abs_corr"};
  for (const auto& n : a.names) header.push_back("pearson_" + n);
  for (const auto& n : a.names) header.push_back("spearman_" + n);
  std::string csv = csv_row(header);

  json runs = json::array();
  for (double lambda : lambdas) {
    tc.lambda = lambda;
    spdlog::info("training {} mapper, lambda {}", o.kind, lambda);
    const TrainResult r = train_mapper(z, a, tc);
    csv += csv_row(metrics_row(lambda, "train", r.train));
    csv += csv_row(metrics_row(lambda, "test", r.test));
    json run = {{"lambda", lambda},
                {"train", split_json(r.train, a.names)},
                {"test", split_json(r.test, a.names)},
                {"final_loss",
                 {{"total", r.final_loss.total}, {"mse_term", r.final_loss.mse_term}, {"corr_term", r.final_loss.corr_term}}},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"stalled", r.stalled}};
    if (o.gram_schmidt) {
      const AttributeMapper ortho = orthogonalize(r.mapper);
      const SplitMetrics gs_train = evaluate_mapper(ortho, z, a, r.train_rows);
      const SplitMetrics gs_test = evaluate_mapper(ortho, z, a, r.test_rows);
      csv += csv_row(metrics_row(lambda, "train_gram_schmidt", gs_train));
      csv += csv_row(metrics_row(lambda, "test_gram_schmidt", gs_test));
      run["gram_schmidt"] = {{"train", split_json(gs_train, a.names)}, {"test", split_json(gs_test, a.names)}};
    }
    runs.push_back(std::move(run));
  }
  io::write_text(o.out, csv);

  if (!o.report.empty()) {
    json priors = json::array();
    for (const auto& t : tc.prior.targets) priors.push_back({{"i", t.i}, {"j", t.j}, {"rho", t.rho}});
    json config = {{"latents", o.latents}, {"attrs", o.attrs}, {"kind", o.kind}, {"lambdas", lambdas},
                   {"hidden", o.hidden}, {"max_iters", o.max_iters}, {"train_fraction", o.train_fraction},
                   {"squared_mse", o.squared_mse}, {"gram_schmidt", o.gram_schmidt}, {"seed", g.seed},
                   {"priors", priors}};
    json doc = envelope("disentangle", std::move(config), inputs, g.run_info());
    doc["attributes"] = a.names;
    doc["runs"] = std::move(runs);
    write_json(o.report, doc);
  }
  return 0;
}

// --- benchmark -----------------------------------------------------------------

int run_benchmark(const BenchmarkArgs& o, const Globals& g) {
  InputHasher inputs;
  inputs.add_manifest(o.manifest);
  inputs.add_report(o.matches);
  for (const auto& e : o.embeddings) inputs.add(e);
  const Dataset ds = load_dataset(o.manifest);
  const MatchSet ms = load_match_set(o.matches);

  matchlab::BenchmarkOptions opt;
  if (o.distance == "euclidean") {
    opt.distance = EmbeddingDistance::Euclidean;
  } else if (o.distance == "cosine") {
    opt.distance = EmbeddingDistance::Cosine;
  } else {
    throw Error(ErrorCode::InvalidArgument, "--distance must be euclidean or cosine");
  }
  opt.focus_group = o.focus_group;
  opt.threads = g.threads;

  std::vector<EmbeddingTable> tables;
  if (o.embeddings.empty()) {
    std::map<std::string, Eigen::VectorXd> vectors;
    for (const auto& s : ds.samples()) vectors[s.sample_id] = s.facerec;
    tables.emplace_back("manifest_facerec", std::move(vectors));
  }
  for (const auto& path : o.embeddings) tables.push_back(load_embeddings(path, fs::path(path).stem().string()));

  auto report_json = [](const BiasReport& r) {
    json models = json::array();
    for (const auto& m : r.models) {
      models.push_back({{"model", m.model_name},
                        {"mean_dist_group0", m.mean_dist_group0},
                        {"mean_dist_group1", m.mean_dist_group1},
                        {"difference", m.difference},
                        {"sem_group0", m.sem_group0},
                        {"sem_group1", m.sem_group1},
                        {"n_group0", m.n_group0},
                        {"n_group1", m.n_group1}});
    }
    return json{{"provenance", r.provenance}, {"models", models}};
  };

  json config = {{"manifest", o.manifest}, {"matches", o.matches}, {"embeddings", o.embeddings},
                 {"distance", o.distance}, {"focus_group", o.focus_group}, {"baseline", o.baseline},
                 {"seed", g.seed}};
  json doc = envelope("benchmark", std::move(config), inputs, g.run_info());
  doc["matched"] = report_json(bias_report(ms, ds, tables, opt));
  doc["unmatched"] = o.baseline ? report_json(unmatched_bias_report(ds, tables, g.seed, opt)) : json(nullptr);
  write_json(o.out, doc);
  return 0;
}

}  // namespace matchlab::cli
