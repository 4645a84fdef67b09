#include "matchlab/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "matchlab/error.hpp"
#include "matchlab/io.hpp"
#include "matchlab/parallel.hpp"

namespace matchlab {
namespace {

struct Candidate {
  double distance;
  std::uint32_t a;  // dataset index, attribute 0
  std::uint32_t b;  // dataset index, attribute 1
};

bool within_caliper(const Sample& a, const Sample& b, const MatchConstraints& c) {
  return !c.facerec_threshold || facerec_distance(a, b) <= *c.facerec_threshold;
}

bool is_reference_for(const Sample& r, const Sample& s, const MatchConstraints& c) {
  return r.identity_id == s.identity_id && r.sample_id != s.sample_id &&
         (!c.require_default_attrs || r.default_attrs_ok);
}

/// Static per-sample flag: has at least one valid reference anywhere in ds.
std::vector<char> reference_flags(const Dataset& ds, const MatchConstraints& c) {
  std::vector<char> ok(ds.size(), 1);
  if (!c.require_references) return ok;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds[i];
    const auto& members = ds.identity_index().at(s.identity_id);
    ok[i] = std::any_of(members.begin(), members.end(),
                        [&](const std::string& id) { return is_reference_for(ds.at(id), s, c); });
  }
  return ok;
}

}  // namespace

void validate(const MatchConstraints& c) {
  if (c.facerec_threshold && !(*c.facerec_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "facerec threshold must be positive");
  }
}

std::vector<std::string> MatchSet::members() const {
  std::vector<std::string> out;
  out.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    out.push_back(p.id_a);
    out.push_back(p.id_b);
  }
  return out;
}

void validate_match_set(const MatchSet& ms, const Dataset& ds, bool strict_identities) {
  std::unordered_set<std::string> used_samples;
  std::unordered_set<std::string> used_identities;
  auto use = [&](const std::string& id) {
    if (!used_samples.insert(id).second) throw Error(ErrorCode::InvalidArgument, "sample reused: " + id);
  };
  for (std::size_t i = 0; i < ms.pairs.size(); ++i) {
    const auto& p = ms.pairs[i];
    const std::string where = "pair " + std::to_string(i) + ": ";
    const Sample& a = ds.at(p.id_a);
    const Sample& b = ds.at(p.id_b);
    if (a.attribute != 0 || b.attribute != 1) {
      throw Error(ErrorCode::InvalidArgument, where + "id_a must have attribute 0 and id_b attribute 1");
    }
    if (strict_identities && a.identity_id == b.identity_id) throw Error(ErrorCode::InvalidArgument, where + "members share an identity");
    if (!(p.distance >= 0.0)) throw Error(ErrorCode::InvalidArgument, where + "negative distance");
    use(p.id_a);
    use(p.id_b);
    if (p.ref_a.has_value() != p.ref_b.has_value()) {
      throw Error(ErrorCode::InvalidArgument, where + "references must be given for both sides");
    }
    if (p.ref_a) {
      const Sample& ra = ds.at(*p.ref_a);
      const Sample& rb = ds.at(*p.ref_b);
      if (ra.identity_id != a.identity_id || rb.identity_id != b.identity_id || ra.sample_id == a.sample_id ||
          rb.sample_id == b.sample_id) {
        throw Error(ErrorCode::InvalidArgument, where + "reference is not a distinct same-identity sample");
      }
      use(*p.ref_a);
      use(*p.ref_b);
    }
    if (!strict_identities) continue;
    for (const auto* identity : {&a.identity_id, &b.identity_id}) {
      if (!used_identities.insert(*identity).second) {
        throw Error(ErrorCode::InvalidArgument, where + "identity reused: " + *identity);
      }
    }
  }
}

double facerec_distance(const Sample& a, const Sample& b) {
  if (a.facerec.size() != b.facerec.size()) {
    throw Error(ErrorCode::DimensionMismatch, "recognition embeddings differ in length");
  }
  return (a.facerec - b.facerec).norm();
}

std::vector<std::string> reference_candidates(const Sample& s, const Dataset& ds, const MatchConstraints& c,
                                              const std::unordered_set<std::string>& excluded) {
  std::vector<std::string> out;
  for (const auto& id : ds.identity_index().at(s.identity_id)) {
    if (excluded.count(id)) continue;
    if (is_reference_for(ds.at(id), s, c)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Neighbor> find_match(const std::string& query, const Dataset& ds, const MatchConstraints& c,
                                   const std::unordered_set<std::string>& excluded) {
  validate(c);
  const Sample& q = ds.at(query);
  if (c.require_references && reference_candidates(q, ds, c, excluded).empty()) return std::nullopt;
  std::optional<Neighbor> best;
  for (const Sample& s : ds.samples()) {
    if (s.attribute == q.attribute || s.identity_id == q.identity_id || excluded.count(s.sample_id)) continue;
    if (!within_caliper(q, s, c)) continue;
    if (c.require_references && reference_candidates(s, ds, c, excluded).empty()) continue;
    const double d = gan_distance(q.latent, s.latent);
    if (!best || d < best->distance || (d == best->distance && s.sample_id < best->id)) {
      best = Neighbor{s.sample_id, d};
    }
  }
  return best;
}

std::pair<std::string, std::string> select_references(const MatchPair& pair, const Dataset& ds,
                                                       const DifficultyFn& difficulty, const MatchConstraints& c,
                                                       const std::unordered_set<std::string>& excluded) {
  const Sample& a = ds.at(pair.id_a);
  const Sample& b = ds.at(pair.id_b);
  const auto cand_a = reference_candidates(a, ds, c, excluded);
  const auto cand_b = reference_candidates(b, ds, c, excluded);
  if (cand_a.empty() || cand_b.empty()) {
    throw Error(ErrorCode::NoValidReference,
                "no valid reference for " + (cand_a.empty() ? pair.id_a : pair.id_b));
  }
  const DifficultyFn& dfn = difficulty ? difficulty : DifficultyFn(facerec_distance);
  std::vector<double> diff_b;
  diff_b.reserve(cand_b.size());
  for (const auto& rb : cand_b) diff_b.push_back(dfn(ds.at(rb), b));

  // Candidates are sorted, so strict improvement keeps the lexicographic tie-break.
  std::pair<std::string, std::string> best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& ra : cand_a) {
    const double da = dfn(ds.at(ra), a);
    for (std::size_t j = 0; j < cand_b.size(); ++j) {
      const double gap = std::abs(da - diff_b[j]);
      if (gap < best_gap) {
        best_gap = gap;
        best = {ra, cand_b[j]};
      }
    }
  }
  return best;
}

MatchSet greedy_match(const Dataset& ds, const MatchConstraints& c, const GreedyOptions& opt) {
  validate(c);
  if (opt.n_pairs && *opt.n_pairs == 0) throw Error(ErrorCode::InvalidArgument, "n_pairs must be positive");

  const auto eligible = reference_flags(ds, c);
  std::vector<std::uint32_t> group0;
  std::vector<std::uint32_t> group1;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!eligible[i]) continue;
    (ds[i].attribute == 0 ? group0 : group1).push_back(static_cast<std::uint32_t>(i));
  }

  // Lexicographic rank of sample ids, for cheap deterministic tie-breaking.
  std::vector<std::uint32_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t x, std::uint32_t y) { return ds[x].sample_id < ds[y].sample_id; });
  std::vector<std::uint32_t> rank(ds.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

  std::vector<std::vector<Candidate>> rows(group0.size());
  parallel_for(group0.size(), opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Sample& a = ds[group0[i]];
      auto& row = rows[i];
      for (const auto jb : group1) {
        const Sample& b = ds[jb];
        if (a.identity_id == b.identity_id || !within_caliper(a, b, c)) continue;
        row.push_back({gan_distance(a.latent, b.latent), group0[i], jb});
      }
    }
  });
  std::vector<Candidate> table;
  for (auto& row : rows) table.insert(table.end(), row.begin(), row.end());
  rows.clear();
  std::sort(table.begin(), table.end(), [&](const Candidate& x, const Candidate& y) {
    return std::tie(x.distance, rank[x.a], rank[x.b]) < std::tie(y.distance, rank[y.a], rank[y.b]);
  });

  // Walking the sorted table and skipping removed identities is a lazily
  // deleted priority queue: the first surviving entry is the closest pair
  // that is still feasible.
  std::unordered_set<std::string> removed_identities;
  MatchSet ms;
  for (const auto& cand : table) {
    if (opt.n_pairs && ms.pairs.size() >= *opt.n_pairs) break;
    const Sample& a = ds[cand.a];
    const Sample& b = ds[cand.b];
    if (removed_identities.count(a.identity_id) || removed_identities.count(b.identity_id)) continue;
    MatchPair pair{a.sample_id, b.sample_id, cand.distance, std::nullopt, std::nullopt};
    if (c.require_references) {
      auto refs = select_references(pair, ds, opt.difficulty, c);
      pair.ref_a = std::move(refs.first);
      pair.ref_b = std::move(refs.second);
    }
    removed_identities.insert(a.identity_id);
    removed_identities.insert(b.identity_id);
    ms.pairs.push_back(std::move(pair));
  }

  ms.provenance["method"] = "greedy_gan_distance";
  ms.provenance["facerec_threshold"] = c.facerec_threshold ? io::format_double(*c.facerec_threshold) : "none";
  ms.provenance["require_references"] = c.require_references ? "true" : "false";
  ms.provenance["require_default_attrs"] = c.require_default_attrs ? "true" : "false";
  ms.provenance["n_pairs"] = opt.n_pairs ? std::to_string(*opt.n_pairs) : "unlimited";
  ms.provenance["reference_difficulty"] = opt.difficulty ? "custom" : "facerec_euclidean";
  return ms;
}

std::vector<Neighbor> knn_retrieve(const std::string& query, const Dataset& ds, std::size_t k,
                                   const KnnMetric& metric) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (metric.kind == KnnMetric::Kind::Combined && !(metric.threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "combined metric needs a positive threshold");
  }
  const Sample& q = ds.at(query);
  std::vector<Neighbor> cands;
  cands.reserve(ds.size());
  for (const Sample& s : ds.samples()) {
    if (s.sample_id == q.sample_id) continue;
    switch (metric.kind) {
      case KnnMetric::Kind::Gan:
        cands.push_back({s.sample_id, gan_distance(q.latent, s.latent)});
        break;
      case KnnMetric::Kind::Facerec:
        cands.push_back({s.sample_id, facerec_distance(q, s)});
        break;
      case KnnMetric::Kind::Combined:
        if (facerec_distance(q, s) <= metric.threshold) cands.push_back({s.sample_id, gan_distance(q.latent, s.latent)});
        break;
    }
  }
  if (cands.size() < k) {
    throw Error(ErrorCode::InsufficientCandidates, query + ": " + std::to_string(cands.size()) +
                                                       " candidates for k=" + std::to_string(k));
  }
  auto by_distance = [](const Neighbor& x, const Neighbor& y) {
    return std::tie(x.distance, x.id) < std::tie(y.distance, y.id);
  };
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(), by_distance);
  cands.resize(k);
  return cands;
}

}  // namespace matchlab
