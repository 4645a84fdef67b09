#pragma once

// Deliberately naive reference implementations used to cross-check the
// library. They share no code with the implementations under test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "matchlab/dataset.hpp"
#include "matchlab/matching.hpp"

namespace matchlab::testing {

inline double naive_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) sum += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
  return std::sqrt(sum);
}

inline double naive_euclid(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum);
}

inline std::vector<const Sample*> naive_references(const Sample& s, const Dataset& ds, const MatchConstraints& c) {
  std::vector<const Sample*> out;
  for (const auto& r : ds.samples()) {
    if (r.identity_id == s.identity_id && r.sample_id != s.sample_id && (!c.require_default_attrs || r.default_attrs_ok)) {
      out.push_back(&r);
    }
  }
  std::sort(out.begin(), out.end(), [](const Sample* x, const Sample* y) { return x->sample_id < y->sample_id; });
  return out;
}

/// Exhaustive equidistant reference choice with recognition distance as difficulty.
inline std::pair<std::string, std::string> oracle_references(const Sample& a, const Sample& b, const Dataset& ds,
                                                             const MatchConstraints& c) {
  std::tuple<double, std::string, std::string> best{std::numeric_limits<double>::infinity(), "", ""};
  for (const Sample* ra : naive_references(a, ds, c)) {
    for (const Sample* rb : naive_references(b, ds, c)) {
      const double gap = std::abs(naive_euclid(ra->facerec, a.facerec) - naive_euclid(rb->facerec, b.facerec));
      const std::tuple<double, std::string, std::string> cand{gap, ra->sample_id, rb->sample_id};
      if (cand < best) best = cand;
    }
  }
  return {std::get<1>(best), std::get<2>(best)};
}

/// Step-by-step greedy simulation: at every step re-enumerates and re-sorts
/// every feasible cross pair among the surviving identities.
inline MatchSet oracle_greedy(const Dataset& ds, const MatchConstraints& c, std::size_t max_pairs = SIZE_MAX) {
  std::set<std::string> removed;
  MatchSet ms;
  while (ms.pairs.size() < max_pairs) {
    std::vector<std::tuple<double, std::string, std::string>> feasible;
    for (const auto& a : ds.samples()) {
      if (a.attribute != 0 || removed.count(a.identity_id)) continue;
      if (c.require_references && naive_references(a, ds, c).empty()) continue;
      for (const auto& b : ds.samples()) {
        if (b.attribute != 1 || removed.count(b.identity_id) || a.identity_id == b.identity_id) continue;
        if (c.require_references && naive_references(b, ds, c).empty()) continue;
        if (c.facerec_threshold && naive_euclid(a.facerec, b.facerec) > *c.facerec_threshold) continue;
        feasible.emplace_back(naive_frobenius(a.latent.expanded(), b.latent.expanded()), a.sample_id, b.sample_id);
      }
    }
    if (feasible.empty()) break;
    std::sort(feasible.begin(), feasible.end());
    const auto& [d, ia, ib] = feasible.front();
    MatchPair p{ia, ib, d, std::nullopt, std::nullopt};
    const Sample& a = ds.at(ia);
    const Sample& b = ds.at(ib);
    if (c.require_references) {
      auto refs = oracle_references(a, b, ds, c);
      p.ref_a = refs.first;
      p.ref_b = refs.second;
    }
    removed.insert(a.identity_id);
    removed.insert(b.identity_id);
    ms.pairs.push_back(p);
  }
  return ms;
}

/// Sequential caliper rule simulated directly from its definition.
inline std::vector<std::pair<std::string, std::string>> oracle_caliper(const std::map<std::string, double>& scores,
                                                                       const Dataset& ds, double caliper,
                                                                       std::uint64_t seed) {
  std::vector<std::string> g0;
  std::vector<std::string> g1;
  for (const auto& s : ds.samples()) (s.attribute == 0 ? g0 : g1).push_back(s.sample_id);
  const bool zero_smaller = g0.size() <= g1.size();
  std::vector<std::string> queries = zero_smaller ? g0 : g1;
  std::set<std::string> pool(zero_smaller ? g1.begin() : g0.begin(), zero_smaller ? g1.end() : g0.end());
  std::sort(queries.begin(), queries.end());
  std::mt19937_64 rng(seed);
  std::shuffle(queries.begin(), queries.end(), rng);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& q : queries) {
    std::string best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& cand : pool) {  // std::set iterates in lexicographic order
      const double gap = std::abs(scores.at(q) - scores.at(cand));
      if (gap < best_gap) {
        best_gap = gap;
        best = cand;
      }
    }
    if (best.empty() || best_gap > caliper) continue;
    pool.erase(best);
    out.emplace_back(zero_smaller ? q : best, zero_smaller ? best : q);
  }
  return out;
}

/// Wilson score interval straight from the closed formula.
inline std::pair<double, double> oracle_wilson(double k, double n, double z) {
  const double p = k / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace matchlab::testing
