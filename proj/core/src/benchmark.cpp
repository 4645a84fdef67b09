#include "matchlab/benchmark.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <utility>

#include "matchlab/balance.hpp"
#include "matchlab/error.hpp"
#include "matchlab/io.hpp"
#include "matchlab/parallel.hpp"

namespace matchlab {

EmbeddingTable::EmbeddingTable(std::string model_name, std::map<std::string, Eigen::VectorXd> vectors)
    : model_name_(std::move(model_name)), vectors_(std::move(vectors)) {
  for (const auto& [id, v] : vectors_) {
    if (v.size() == 0) throw Error(ErrorCode::ShapeError, "empty embedding for " + id);
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) throw Error(ErrorCode::ShapeError, "embedding length differs for " + id);
    if (!v.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite embedding for " + id);
  }
}

const Eigen::VectorXd& EmbeddingTable::at(const std::string& id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) {
    throw Error(ErrorCode::MissingEmbedding, "model " + model_name_ + " has no embedding for " + id);
  }
  return it->second;
}

namespace {

bool is_number(const std::string& field) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

}  // namespace

EmbeddingTable load_embeddings(const std::string& path, std::string model_name) {
  auto rows = io::read_csv(path);
  std::map<std::string, Eigen::VectorXd> vectors;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 2) throw Error(ErrorCode::ShapeError, path + ": row " + std::to_string(r + 1) + " has no values");
    if (r == 0 && !is_number(row[1])) continue;  // header
    Eigen::VectorXd v(static_cast<Eigen::Index>(row.size() - 1));
    for (std::size_t k = 1; k < row.size(); ++k) {
      v[static_cast<Eigen::Index>(k - 1)] = io::parse_double(row[k], path);
    }
    if (!vectors.emplace(row[0], std::move(v)).second) {
      throw Error(ErrorCode::DuplicateId, path + ": duplicate sample id " + row[0]);
    }
  }
  return EmbeddingTable(std::move(model_name), std::move(vectors));
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  std::string out;
  for (const auto& [id, v] : table.vectors()) {
    out += id;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      out += ',';
      out += io::format_double(v[k]);
    }
    out += '\n';
  }
  io::write_text(path, out);
}

double embedding_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, EmbeddingDistance kind) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "embeddings differ in length");
  if (kind == EmbeddingDistance::Euclidean) return (a - b).norm();
  const double denom = a.norm() * b.norm();
  if (!(denom > 0.0)) throw Error(ErrorCode::InvalidArgument, "cosine distance of a zero embedding");
  return std::max(0.0, 1.0 - a.dot(b) / denom);
}

GroupDistances same_identity_distances(const MatchSet& ms, const Dataset& ds, const EmbeddingTable& table,
                                       EmbeddingDistance kind) {
  GroupDistances out;
  for (std::size_t i = 0; i < ms.pairs.size(); ++i) {
    const auto& p = ms.pairs[i];
    if (!p.ref_a || !p.ref_b) {
      throw Error(ErrorCode::MissingReference, "pair " + std::to_string(i) + " has no reference samples");
    }
    const std::pair<const std::string*, const std::string*> sides[] = {{&p.id_a, &*p.ref_a}, {&p.id_b, &*p.ref_b}};
    for (const auto& [test, ref] : sides) {
      const double d = embedding_distance(table.at(*test), table.at(*ref), kind);
      (ds.at(*test).attribute == 0 ? out.group0 : out.group1).push_back(d);
    }
  }
  return out;
}

BiasGap bias_gap(const std::vector<double>& first, const std::vector<double>& second) {
  if (first.empty() || second.empty()) throw Error(ErrorCode::EmptyGroup, "bias gap needs both groups nonempty");
  const MeanSem a = mean_sem(first);
  const MeanSem b = mean_sem(second);
  return {a.mean - b.mean, a.sem, b.sem};
}

namespace {

ModelBias summarize(const std::string& name, const GroupDistances& d, int focus_group) {
  if (d.group0.empty() || d.group1.empty()) {
    throw Error(ErrorCode::EmptyGroup, "model " + name + ": a group has no distances");
  }
  const MeanSem g0 = mean_sem(d.group0);
  const MeanSem g1 = mean_sem(d.group1);
  ModelBias m;
  m.model_name = name;
  m.mean_dist_group0 = g0.mean;
  m.mean_dist_group1 = g1.mean;
  m.sem_group0 = g0.sem;
  m.sem_group1 = g1.sem;
  m.n_group0 = d.group0.size();
  m.n_group1 = d.group1.size();
  m.difference = focus_group == 0 ? bias_gap(d.group0, d.group1).difference : bias_gap(d.group1, d.group0).difference;
  return m;
}

template <typename DistFn>
BiasReport build_report(const std::vector<EmbeddingTable>& tables, const BenchmarkOptions& opt, DistFn&& dist) {
  if (opt.focus_group != 0 && opt.focus_group != 1) throw Error(ErrorCode::InvalidArgument, "focus group must be 0 or 1");
  BiasReport report;
  report.models.resize(tables.size());
  parallel_for(tables.size(), opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      report.models[k] = summarize(tables[k].model_name(), dist(tables[k]), opt.focus_group);
    }
  });
  report.provenance["distance"] = opt.distance == EmbeddingDistance::Euclidean ? "euclidean" : "cosine";
  report.provenance["difference"] = opt.focus_group == 0 ? "mean_group0 - mean_group1" : "mean_group1 - mean_group0";
  return report;
}

}  // namespace

BiasReport bias_report(const MatchSet& ms, const Dataset& ds, const std::vector<EmbeddingTable>& tables,
                       const BenchmarkOptions& opt) {
  auto report = build_report(tables, opt, [&](const EmbeddingTable& t) {
    return same_identity_distances(ms, ds, t, opt.distance);
  });
  report.provenance["condition"] = "matched";
  return report;
}

GroupDistances unmatched_distances(const Dataset& ds, const EmbeddingTable& table, std::uint64_t seed,
                                   EmbeddingDistance kind) {
  std::mt19937_64 rng(seed);
  GroupDistances out;
  for (const auto& s : ds.samples()) {
    std::vector<std::string> refs;
    for (const auto& id : ds.identity_index().at(s.identity_id)) {
      if (id != s.sample_id) refs.push_back(id);
    }
    if (refs.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, refs.size() - 1);
    const double d = embedding_distance(table.at(s.sample_id), table.at(refs[pick(rng)]), kind);
    (s.attribute == 0 ? out.group0 : out.group1).push_back(d);
  }
  return out;
}

BiasReport unmatched_bias_report(const Dataset& ds, const std::vector<EmbeddingTable>& tables, std::uint64_t seed,
                                 const BenchmarkOptions& opt) {
  auto report = build_report(tables, opt, [&](const EmbeddingTable& t) {
    return unmatched_distances(ds, t, seed, opt.distance);
  });
  report.provenance["condition"] = "unmatched";
  report.provenance["seed"] = std::to_string(seed);
  return report;
}

}  // namespace matchlab
