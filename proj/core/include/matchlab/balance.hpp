#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matchlab/dataset.hpp"
#include "matchlab/matching.hpp"

namespace matchlab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion, clamped to [0, 1].
/// InvalidCount when successes > n or n == 0.
Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.96);

/// Per-group summary of one covariate. Binary covariates get Wilson
/// intervals; real ones get mean +/- z * SEM.
struct GroupStats {
  double mean0 = 0.0;
  double mean1 = 0.0;
  Interval ci0;
  Interval ci1;
  double gap = 0.0;  // |mean1 - mean0|
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

struct CovariateBalance {
  std::string name;
  CovariateKind kind = CovariateKind::Real;
  GroupStats before;  // full dataset
  GroupStats after;   // matched subset
  std::optional<double> gap_reduction;  // 1 - after/before; empty when before.gap < 1e-12
};

struct BalanceReport {
  std::vector<CovariateBalance> covariates;
};

/// Stats over the given sample ids (image level). EmptyGroup when a group is empty.
GroupStats covariate_stats(const Dataset& ds, const std::vector<std::string>& ids, std::size_t covariate,
                           double z = 1.96);

/// Full dataset vs. the pair members of `subset` (references are not counted).
BalanceReport balance_report(const Dataset& ds, const MatchSet& subset);

struct IntersectionalCell {
  std::vector<int> values;  // one 0/1 per requested covariate
  std::size_t count0 = 0;
  std::size_t count1 = 0;
  double proportion0 = 0.0;
  double proportion1 = 0.0;
  Interval ci0;
  Interval ci1;
};

struct IntersectionalReport {
  std::vector<std::string> covariates;
  std::vector<IntersectionalCell> cells;  // all 2^k combinations, first covariate most significant
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

/// Joint distribution of up to 4 binary covariates per attribute group.
/// NonBinaryCovariate for a real-valued column.
IntersectionalReport intersectional_report(const Dataset& ds, const std::vector<std::string>& covariates);
IntersectionalReport intersectional_report(const Dataset& ds, const MatchSet& subset,
                                           const std::vector<std::string>& covariates);
IntersectionalReport intersectional_report(const Dataset& ds, const std::vector<std::string>& ids,
                                           const std::vector<std::string>& covariates);

struct AttributeError {
  std::string name;
  CovariateKind kind = CovariateKind::Real;
  double mean = 0.0;  // MAE for real covariates, % disagreement for binary ones
  double sem = 0.0;   // standard error over query samples
};

/// For every sample, compares each attribute with its k nearest neighbors
/// under `metric` and aggregates per attribute.
std::vector<AttributeError> knn_attribute_errors(const Dataset& ds, const KnnMetric& metric, std::size_t k,
                                                 const std::vector<std::string>& attributes);

/// Sample mean and standard error of the mean (0 for fewer than 2 values).
struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
};
MeanSem mean_sem(const std::vector<double>& values);

}  // namespace matchlab
