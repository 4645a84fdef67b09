#include "matchlab/balance.hpp"

#include <algorithm>
#include <cmath>

#include "matchlab/error.hpp"

namespace matchlab {
namespace {

constexpr double kUndefinedGap = 1e-12;

std::size_t covariate_or_throw(const Dataset& ds, const std::string& name) {
  const auto idx = ds.covariate_index(name);
  if (!idx) throw Error(ErrorCode::UnknownId, "unknown covariate '" + name + "'");
  return *idx;
}

std::vector<std::string> all_ids(const Dataset& ds) {
  std::vector<std::string> ids;
  ids.reserve(ds.size());
  for (const auto& s : ds.samples()) ids.push_back(s.sample_id);
  return ids;
}

}  // namespace

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw Error(ErrorCode::InvalidCount, "n must be positive");
  if (successes > n) throw Error(ErrorCode::InvalidCount, "successes exceed n");
  if (!(z > 0.0)) throw Error(ErrorCode::InvalidArgument, "z must be positive");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  Interval ci{std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0)};
  // center == half exactly at p = 0 (and mirrored at p = 1).
  if (successes == 0) ci.lo = 0.0;
  if (successes == n) ci.hi = 1.0;
  return ci;
}

MeanSem mean_sem(const std::vector<double>& values) {
  MeanSem out;
  if (values.empty()) return out;
  // Summing in sorted order makes the result independent of input order.
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  const double n = static_cast<double>(sorted.size());
  out.mean = sum / n;
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - out.mean) * (v - out.mean);
    out.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

GroupStats covariate_stats(const Dataset& ds, const std::vector<std::string>& ids, std::size_t covariate,
                           double z) {
  const auto& spec = ds.covariate_specs().at(covariate);
  std::vector<double> v0;
  std::vector<double> v1;
  for (const auto& id : ids) {
    const Sample& s = ds.at(id);
    (s.attribute == 0 ? v0 : v1).push_back(s.covariates[covariate]);
  }
  if (v0.empty() || v1.empty()) {
    throw Error(ErrorCode::EmptyGroup, "covariate " + spec.name + ": an attribute group is empty");
  }
  GroupStats g;
  g.n0 = v0.size();
  g.n1 = v1.size();
  const auto m0 = mean_sem(v0);
  const auto m1 = mean_sem(v1);
  g.mean0 = m0.mean;
  g.mean1 = m1.mean;
  if (spec.kind == CovariateKind::Binary) {
    const auto count = [](const std::vector<double>& v) {
      return static_cast<std::size_t>(std::count(v.begin(), v.end(), 1.0));
    };
    g.ci0 = wilson_interval(count(v0), v0.size(), z);
    g.ci1 = wilson_interval(count(v1), v1.size(), z);
  } else {
    g.ci0 = {m0.mean - z * m0.sem, m0.mean + z * m0.sem};
    g.ci1 = {m1.mean - z * m1.sem, m1.mean + z * m1.sem};
  }
  g.gap = std::abs(g.mean1 - g.mean0);
  return g;
}

BalanceReport balance_report(const Dataset& ds, const MatchSet& subset) {
  const auto full = all_ids(ds);
  const auto matched = subset.members();
  for (const auto& id : matched) ds.at(id);  // UnknownId for foreign ids
  BalanceReport report;
  for (std::size_t c = 0; c < ds.covariate_specs().size(); ++c) {
    CovariateBalance cb;
    cb.name = ds.covariate_specs()[c].name;
    cb.kind = ds.covariate_specs()[c].kind;
    cb.before = covariate_stats(ds, full, c);
    cb.after = covariate_stats(ds, matched, c);
    if (cb.before.gap >= kUndefinedGap) cb.gap_reduction = 1.0 - cb.after.gap / cb.before.gap;
    report.covariates.push_back(std::move(cb));
  }
  return report;
}

IntersectionalReport intersectional_report(const Dataset& ds, const std::vector<std::string>& ids,
                                           const std::vector<std::string>& covariates) {
  if (covariates.empty() || covariates.size() > 4) {
    throw Error(ErrorCode::InvalidArgument, "intersectional report takes 1 to 4 covariates");
  }
  std::vector<std::size_t> cols;
  for (const auto& name : covariates) {
    const auto idx = covariate_or_throw(ds, name);
    if (ds.covariate_specs()[idx].kind != CovariateKind::Binary) {
      throw Error(ErrorCode::NonBinaryCovariate, "covariate '" + name + "' is not binary");
    }
    cols.push_back(idx);
  }
  const std::size_t k = cols.size();
  const std::size_t n_cells = std::size_t{1} << k;
  std::vector<std::size_t> count0(n_cells, 0);
  std::vector<std::size_t> count1(n_cells, 0);
  IntersectionalReport rep;
  rep.covariates = covariates;
  for (const auto& id : ids) {
    const Sample& s = ds.at(id);
    std::size_t cell = 0;
    for (std::size_t j = 0; j < k; ++j) cell = (cell << 1) | (s.covariates[cols[j]] == 1.0 ? 1u : 0u);
    if (s.attribute == 0) {
      ++count0[cell];
      ++rep.n0;
    } else {
      ++count1[cell];
      ++rep.n1;
    }
  }
  if (rep.n0 == 0 || rep.n1 == 0) throw Error(ErrorCode::EmptyGroup, "an attribute group is empty");
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    IntersectionalCell out;
    for (std::size_t j = 0; j < k; ++j) out.values.push_back(static_cast<int>((cell >> (k - 1 - j)) & 1u));
    out.count0 = count0[cell];
    out.count1 = count1[cell];
    out.proportion0 = static_cast<double>(out.count0) / static_cast<double>(rep.n0);
    out.proportion1 = static_cast<double>(out.count1) / static_cast<double>(rep.n1);
    out.ci0 = wilson_interval(out.count0, rep.n0);
    out.ci1 = wilson_interval(out.count1, rep.n1);
    rep.cells.push_back(std::move(out));
  }
  return rep;
}

IntersectionalReport intersectional_report(const Dataset& ds, const std::vector<std::string>& covariates) {
  return intersectional_report(ds, all_ids(ds), covariates);
}

IntersectionalReport intersectional_report(const Dataset& ds, const MatchSet& subset,
                                           const std::vector<std::string>& covariates) {
  return intersectional_report(ds, subset.members(), covariates);
}

std::vector<AttributeError> knn_attribute_errors(const Dataset& ds, const KnnMetric& metric, std::size_t k,
                                                 const std::vector<std::string>& attributes) {
  std::vector<std::size_t> cols;
  for (const auto& name : attributes) cols.push_back(covariate_or_throw(ds, name));
  std::vector<std::vector<double>> per_sample(cols.size());
  for (const auto& s : ds.samples()) {
    const auto neighbors = knn_retrieve(s.sample_id, ds, k, metric);
    for (std::size_t a = 0; a < cols.size(); ++a) {
      const bool binary = ds.covariate_specs()[cols[a]].kind == CovariateKind::Binary;
      double err = 0.0;
      for (const auto& nb : neighbors) {
        const double diff = std::abs(ds.at(nb.id).covariates[cols[a]] - s.covariates[cols[a]]);
        err += binary ? (diff != 0.0 ? 100.0 : 0.0) : diff;
      }
      per_sample[a].push_back(err / static_cast<double>(neighbors.size()));
    }
  }
  std::vector<AttributeError> out;
  for (std::size_t a = 0; a < cols.size(); ++a) {
    const auto ms = mean_sem(per_sample[a]);
    out.push_back({attributes[a], ds.covariate_specs()[cols[a]].kind, ms.mean, ms.sem});
  }
  return out;
}

}  // namespace matchlab
