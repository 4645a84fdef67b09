#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "matchlab/matching.hpp"
#include "support/expect_error.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace ml = matchlab;
using ml::ErrorCode;
using ml::testing::scalar_sample;

namespace {

void expect_same_matches(const ml::MatchSet& got, const ml::MatchSet& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got.pairs[i].id_a, want.pairs[i].id_a) << "pair " << i;
    EXPECT_EQ(got.pairs[i].id_b, want.pairs[i].id_b) << "pair " << i;
    EXPECT_NEAR(got.pairs[i].distance, want.pairs[i].distance, 1e-12) << "pair " << i;
    EXPECT_EQ(got.pairs[i].ref_a, want.pairs[i].ref_a) << "pair " << i;
    EXPECT_EQ(got.pairs[i].ref_b, want.pairs[i].ref_b) << "pair " << i;
  }
}

// Scalar latents on a line; recognition vectors carry one coordinate.
ml::Dataset six_sample_fixture() {
  std::vector<ml::Sample> s{
      scalar_sample("a1", "p1", 0, 0.0), scalar_sample("a2", "p2", 0, 5.0), scalar_sample("a3", "p3", 0, 9.0),
      scalar_sample("b1", "p4", 1, 0.9), scalar_sample("b2", "p5", 1, 4.0), scalar_sample("b3", "p6", 1, 0.5),
  };
  return ml::Dataset({}, s);
}

std::vector<ml::MatchConstraints> constraint_variants() {
  std::vector<ml::MatchConstraints> out(4);
  out[1].facerec_threshold = 1.2;
  out[2].require_references = true;
  out[3].facerec_threshold = 1.5;
  out[3].require_references = true;
  out[3].require_default_attrs = true;
  return out;
}

}  // namespace

TEST(FindMatch, OnlyCandidateIsReturned) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0.0), scalar_sample("b", "q", 1, 3.0)});
  const auto m = ml::find_match("a", ds, {});
  ASSERT_TRUE(m);
  EXPECT_EQ(m->id, "b");
  EXPECT_DOUBLE_EQ(m->distance, 3.0);
}

TEST(FindMatch, RecognitionThresholdCanMakeItInfeasible) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0.0, 0.0), scalar_sample("b", "q", 1, 0.1, 2.0),
                            scalar_sample("c", "r", 1, 0.2, -0.7)});
  ml::MatchConstraints c;
  c.facerec_threshold = 0.6;
  EXPECT_FALSE(ml::find_match("a", ds, c));
  EXPECT_ML_ERROR(ml::find_match("zz", ds, c), ErrorCode::UnknownId);
}

TEST(FindMatch, ExhaustiveScanOnFiveSamples) {
  Eigen::MatrixXd l(2, 2);
  std::vector<ml::Sample> s;
  const double values[5][4] = {{0, 0, 0, 0}, {1, 1, 0, 0}, {0, 0.5, 0.5, 0}, {3, 0, 0, 0}, {0.2, 0.2, 0.2, 0.2}};
  const int attrs[5] = {0, 1, 1, 0, 1};
  for (int i = 0; i < 5; ++i) {
    l << values[i][0], values[i][1], values[i][2], values[i][3];
    s.push_back(ml::testing::make_sample("s" + std::to_string(i), "p" + std::to_string(i), attrs[i], l,
                                         Eigen::VectorXd::Zero(1)));
  }
  const ml::Dataset ds({}, s);
  for (const auto& q : ds.samples()) {
    std::optional<ml::Neighbor> best;
    for (const auto& c : ds.samples()) {
      if (c.attribute == q.attribute) continue;
      const double d = ml::testing::naive_frobenius(q.latent.expanded(), c.latent.expanded());
      if (!best || d < best->distance) best = ml::Neighbor{c.sample_id, d};
    }
    const auto got = ml::find_match(q.sample_id, ds, {});
    ASSERT_TRUE(got);
    EXPECT_EQ(got->id, best->id);
    EXPECT_NEAR(got->distance, best->distance, 1e-12);
  }
}

TEST(FindMatch, ExclusionAndSameIdentityAreSkipped) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0.0), scalar_sample("b", "p", 1, 0.0),
                            scalar_sample("c", "q", 1, 1.0), scalar_sample("d", "r", 1, 2.0)});
  EXPECT_EQ(ml::find_match("a", ds, {})->id, "c");
  EXPECT_EQ(ml::find_match("a", ds, {}, {"c"})->id, "d");
}

TEST(GreedyMatch, TwoSamplesAreForced) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 1.0), scalar_sample("b", "q", 1, 3.5)});
  const auto ms = ml::greedy_match(ds, {});
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms.pairs[0], (ml::MatchPair{"a", "b", 2.5, std::nullopt, std::nullopt}));
}

TEST(GreedyMatch, SixSampleFixtureFollowsTheOracle) {
  const auto ds = six_sample_fixture();
  const auto ms = ml::greedy_match(ds, {});
  // a1-b3 (0.5) first, then a2-b2 (1.0), then a3-b1 (8.1).
  ASSERT_EQ(ms.size(), 3u);
  EXPECT_EQ(ms.pairs[0].id_a, "a1");
  EXPECT_EQ(ms.pairs[0].id_b, "b3");
  EXPECT_EQ(ms.pairs[1].id_a, "a2");
  EXPECT_EQ(ms.pairs[1].id_b, "b2");
  EXPECT_EQ(ms.pairs[2].id_a, "a3");
  EXPECT_EQ(ms.pairs[2].id_b, "b1");
  expect_same_matches(ms, ml::testing::oracle_greedy(ds, {}));
}

TEST(GreedyMatch, SingleIdentityGivesNothing) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0.0), scalar_sample("b", "p", 1, 0.0),
                            scalar_sample("c", "p", 1, 1.0)});
  EXPECT_TRUE(ml::greedy_match(ds, {}).empty());
}

TEST(GreedyMatch, RespectsThePairBudget) {
  const auto ds = six_sample_fixture();
  ml::GreedyOptions opt;
  opt.n_pairs = 2;
  EXPECT_EQ(ml::greedy_match(ds, {}, opt).size(), 2u);
}

TEST(GreedyMatch, EqualsBruteForceOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    ml::testing::RandomDatasetSpec spec;
    spec.n = 10 + static_cast<int>(seed % 30);
    spec.identities = std::max(3, spec.n / 3);
    spec.integer_latents = seed % 2 == 0;  // forces distance ties
    const auto ds = ml::testing::random_dataset(spec, seed);
    for (const auto& c : constraint_variants()) {
      SCOPED_TRACE("seed " + std::to_string(seed));
      expect_same_matches(ml::greedy_match(ds, c), ml::testing::oracle_greedy(ds, c));
    }
  }
}

TEST(GreedyMatch, OutputIsInvariantToSampleOrder) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ml::testing::RandomDatasetSpec spec;
    spec.n = 30;
    spec.integer_latents = true;
    const auto ds = ml::testing::random_dataset(spec, seed);
    std::vector<ml::Sample> shuffled(ds.samples());
    std::mt19937_64 rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const ml::Dataset other({}, shuffled);
    for (const auto& c : constraint_variants()) {
      expect_same_matches(ml::greedy_match(other, c), ml::greedy_match(ds, c));
    }
  }
}

TEST(GreedyMatch, NeverReusesAnIdentityOrSample) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    ml::testing::RandomDatasetSpec spec;
    spec.n = 60;
    spec.identities = 20;
    const auto ds = ml::testing::random_dataset(spec, seed);
    for (const auto& c : constraint_variants()) {
      const auto ms = ml::greedy_match(ds, c);
      EXPECT_NO_THROW(ml::validate_match_set(ms, ds));
      std::set<std::string> identities;
      for (const auto& p : ms.pairs) {
        EXPECT_TRUE(identities.insert(ds.at(p.id_a).identity_id).second);
        EXPECT_TRUE(identities.insert(ds.at(p.id_b).identity_id).second);
      }
    }
  }
}

TEST(GreedyMatch, ConstraintsCanIncreaseThePairCount) {
  // Unconstrained, a-e (distance 2) goes first and removes identity q, which
  // strands c. With the recognition caliper a-e is infeasible and two pairs fit.
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0, 3), scalar_sample("b", "r", 1, 9, 5),
                            scalar_sample("c", "q", 0, 2, 2), scalar_sample("d", "s", 1, 9, 1),
                            scalar_sample("e", "q", 1, 2, 0)});
  ml::MatchConstraints caliper;
  caliper.facerec_threshold = 2.0;
  EXPECT_EQ(ml::greedy_match(ds, {}).size(), 1u);
  EXPECT_EQ(ml::greedy_match(ds, caliper).size(), 2u);
  expect_same_matches(ml::greedy_match(ds, caliper), ml::testing::oracle_greedy(ds, caliper));
}

TEST(GreedyMatch, RelaxingConstraintsKeepsAtLeastHalfThePairs) {
  // Greedy is a maximal matching on the identity graph and relaxing a
  // constraint only adds edges, so relaxed >= max_matching(strict) / 2 >= strict / 2.
  std::size_t total_strict = 0;
  std::size_t total_relaxed = 0;
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    ml::testing::RandomDatasetSpec spec;
    spec.n = 40;
    spec.identities = 15;
    const auto ds = ml::testing::random_dataset(spec, seed);
    ml::MatchConstraints strict;
    strict.facerec_threshold = 1.0;
    strict.require_references = true;
    ml::MatchConstraints no_refs = strict;
    no_refs.require_references = false;
    ml::MatchConstraints no_threshold = strict;
    no_threshold.facerec_threshold.reset();
    const std::size_t n_strict = ml::greedy_match(ds, strict).size();
    for (const auto& relaxed : {no_refs, no_threshold, ml::MatchConstraints{}}) {
      const std::size_t n = ml::greedy_match(ds, relaxed).size();
      EXPECT_GE(2 * n, n_strict) << "seed " << seed;
      total_relaxed += n;
      total_strict += n_strict;
    }
  }
  EXPECT_GT(total_relaxed, total_strict);
}

TEST(GreedyMatch, ThreadCountDoesNotChangeTheResult) {
  ml::testing::RandomDatasetSpec spec;
  spec.n = 120;
  spec.identities = 50;
  spec.integer_latents = true;
  const auto ds = ml::testing::random_dataset(spec, 7);
  ml::MatchConstraints c;
  c.require_references = true;
  ml::GreedyOptions one;
  ml::GreedyOptions many;
  many.threads = 8;
  expect_same_matches(ml::greedy_match(ds, c, many), ml::greedy_match(ds, c, one));
}

TEST(GreedyMatch, RejectsANonPositiveThreshold) {
  ml::MatchConstraints c;
  c.facerec_threshold = 0.0;
  EXPECT_ML_ERROR(ml::greedy_match(six_sample_fixture(), c), ErrorCode::InvalidArgument);
}

TEST(SelectReferences, SingleCandidatesAreForced) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0, 0), scalar_sample("ra", "p", 1, 0, 1),
                            scalar_sample("b", "q", 1, 0, 0), scalar_sample("rb", "q", 0, 0, 5)});
  const auto refs = ml::select_references({"a", "b", 0.0, {}, {}}, ds, ml::facerec_distance, {});
  EXPECT_EQ(refs, (std::pair<std::string, std::string>{"ra", "rb"}));
}

TEST(SelectReferences, PicksTheMostEquidistantPair) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0, 0), scalar_sample("ra1", "p", 0, 0, 1.0),
                            scalar_sample("ra3", "p", 0, 0, 3.0), scalar_sample("b", "q", 1, 0, 0),
                            scalar_sample("rb", "q", 1, 0, 2.9)});
  const auto refs = ml::select_references({"a", "b", 0.0, {}, {}}, ds, ml::facerec_distance, {});
  EXPECT_EQ(refs.first, "ra3");
  EXPECT_EQ(refs.second, "rb");
}

TEST(SelectReferences, DefaultAttributeFilterCanEmptyThePool) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0, 0), scalar_sample("ra", "p", 0, 0, 1, {}, false),
                            scalar_sample("b", "q", 1, 0, 0), scalar_sample("rb", "q", 1, 0, 2)});
  ml::MatchConstraints c;
  c.require_default_attrs = true;
  EXPECT_ML_ERROR(ml::select_references({"a", "b", 0.0, {}, {}}, ds, ml::facerec_distance, c),
                  ErrorCode::NoValidReference);
  EXPECT_NO_THROW(ml::select_references({"a", "b", 0.0, {}, {}}, ds, ml::facerec_distance, {}));
}

TEST(SelectReferences, CustomDifficultyIsHonoured) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0, 0), scalar_sample("ra1", "p", 0, 1.0, 0),
                            scalar_sample("ra2", "p", 0, 4.0, 0), scalar_sample("b", "q", 1, 0, 0),
                            scalar_sample("rb", "q", 1, 4.2, 0)});
  const ml::DifficultyFn latent_gap = [](const ml::Sample& r, const ml::Sample& t) {
    return ml::gan_distance(r.latent, t.latent);
  };
  EXPECT_EQ(ml::select_references({"a", "b", 0.0, {}, {}}, ds, latent_gap, {}).first, "ra2");
}

TEST(Knn, NearestMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ml::testing::RandomDatasetSpec spec;
    spec.n = 8;
    const auto ds = ml::testing::random_dataset(spec, 300 + seed);
    for (const auto& q : ds.samples()) {
      std::vector<std::pair<double, std::string>> all;
      for (const auto& c : ds.samples()) {
        if (c.sample_id != q.sample_id)
          all.emplace_back(ml::testing::naive_frobenius(q.latent.expanded(), c.latent.expanded()), c.sample_id);
      }
      std::sort(all.begin(), all.end());
      const auto got = ml::knn_retrieve(q.sample_id, ds, 7, ml::KnnMetric::gan());
      ASSERT_EQ(got.size(), 7u);
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].id, all[i].second);
        EXPECT_NEAR(got[i].distance, all[i].first, 1e-12);
      }
    }
  }
}

TEST(Knn, DuplicateComesFirstAtZero) {
  const ml::Dataset ds({}, {scalar_sample("q", "p", 0, 1.0), scalar_sample("x", "r", 1, 1.5),
                            scalar_sample("z", "s", 0, 1.0)});
  const auto got = ml::knn_retrieve("q", ds, 2, ml::KnnMetric::gan());
  EXPECT_EQ(got[0], (ml::Neighbor{"z", 0.0}));
  EXPECT_EQ(got[1].id, "x");
}

TEST(Knn, FacerecAndCombinedMetrics) {
  const ml::Dataset ds({}, {scalar_sample("q", "p", 0, 0.0, 0.0), scalar_sample("near_face", "r", 1, 5.0, 0.1),
                            scalar_sample("near_latent", "s", 0, 0.1, 3.0), scalar_sample("both", "t", 1, 1.0, 0.5)});
  EXPECT_EQ(ml::knn_retrieve("q", ds, 1, ml::KnnMetric::facerec())[0].id, "near_face");
  EXPECT_EQ(ml::knn_retrieve("q", ds, 1, ml::KnnMetric::gan())[0].id, "near_latent");
  const auto combined = ml::knn_retrieve("q", ds, 2, ml::KnnMetric::combined(0.6));
  EXPECT_EQ(combined[0].id, "both");
  EXPECT_EQ(combined[1].id, "near_face");
  EXPECT_ML_ERROR(ml::knn_retrieve("q", ds, 3, ml::KnnMetric::combined(0.6)), ErrorCode::InsufficientCandidates);
  EXPECT_ML_ERROR(ml::knn_retrieve("q", ds, 4, ml::KnnMetric::gan()), ErrorCode::InsufficientCandidates);
}

TEST(ValidateMatchSet, CatchesViolations) {
  const ml::Dataset ds({}, {scalar_sample("a", "p", 0, 0), scalar_sample("ra", "p", 1, 0),
                            scalar_sample("b", "q", 1, 0), scalar_sample("c", "q", 0, 0),
                            scalar_sample("d", "r", 1, 0)});
  ml::MatchSet ok;
  ok.pairs.push_back({"a", "b", 0, "ra", "c"});
  EXPECT_NO_THROW(ml::validate_match_set(ok, ds));

  ml::MatchSet same_group;
  same_group.pairs.push_back({"a", "c", 0, {}, {}});
  EXPECT_ML_ERROR(ml::validate_match_set(same_group, ds), ErrorCode::InvalidArgument);

  ml::MatchSet reused;
  reused.pairs.push_back({"a", "b", 0, {}, {}});
  reused.pairs.push_back({"c", "d", 0, {}, {}});
  EXPECT_ML_ERROR(ml::validate_match_set(reused, ds), ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(ml::validate_match_set(reused, ds, false));

  ml::MatchSet bad_ref;
  bad_ref.pairs.push_back({"a", "b", 0, "d", "c"});
  EXPECT_ML_ERROR(ml::validate_match_set(bad_ref, ds), ErrorCode::InvalidArgument);

  ml::MatchSet one_sided;
  one_sided.pairs.push_back({"a", "b", 0, "ra", {}});
  EXPECT_ML_ERROR(ml::validate_match_set(one_sided, ds), ErrorCode::InvalidArgument);

  ml::MatchSet ref_reused;
  ref_reused.pairs.push_back({"a", "b", 0, "ra", "c"});
  ref_reused.pairs.push_back({"c", "d", 0, {}, {}});
  EXPECT_ML_ERROR(ml::validate_match_set(ref_reused, ds, false), ErrorCode::InvalidArgument);
}
