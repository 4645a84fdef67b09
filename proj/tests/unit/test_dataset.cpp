#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "matchlab/dataset.hpp"
#include "matchlab/io.hpp"
#include "support/expect_error.hpp"
#include "support/fixtures.hpp"
#include "support/temp_dir.hpp"

namespace ml = matchlab;
using ml::ErrorCode;
using ml::testing::scalar_sample;

namespace {

ml::Dataset two_sample_dataset() {
  std::vector<ml::CovariateSpec> specs{{"smile", ml::CovariateKind::Binary}, {"age", ml::CovariateKind::Real}};
  std::vector<ml::Sample> samples;
  samples.push_back(scalar_sample("a", "p1", 0, 0.5, 1.0, {1, 31.5}));
  samples.push_back(scalar_sample("b", "p2", 1, -0.25, 2.0, {0, 40}, false));
  return ml::Dataset(specs, samples);
}

void write_manifest(const std::filesystem::path& path, const std::string& body) {
  ml::io::write_text(path, "sample_id,identity_id,attribute,default_attrs_ok,latent_path,facerec_path\n" + body);
}

}  // namespace

TEST(Dataset, IdentityIndexGroupsByIdentity) {
  std::vector<ml::Sample> samples{scalar_sample("s0", "x", 0, 0), scalar_sample("s1", "y", 1, 0),
                                  scalar_sample("s2", "x", 1, 0)};
  const ml::Dataset ds({}, samples);
  ASSERT_EQ(ds.identity_index().size(), 2u);
  EXPECT_EQ(ds.identity_index().at("x"), (std::vector<std::string>{"s0", "s2"}));
  EXPECT_EQ(ds.identity_index().at("y"), (std::vector<std::string>{"s1"}));
  EXPECT_EQ(ds.index_of("s2"), 2u);
  EXPECT_ML_ERROR(ds.at("nope"), ErrorCode::UnknownId);
}

TEST(Dataset, GroupSplitPartitionsByAttribute) {
  std::vector<ml::Sample> samples{scalar_sample("s0", "a", 0, 0), scalar_sample("s1", "b", 1, 0),
                                  scalar_sample("s2", "c", 1, 0)};
  const auto [g0, g1] = ml::group_split(ml::Dataset({}, samples));
  EXPECT_EQ(g0, (std::vector<std::string>{"s0"}));
  EXPECT_EQ(g1, (std::vector<std::string>{"s1", "s2"}));
}

TEST(Dataset, GroupSplitIsAPartitionOnRandomData) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ds = ml::testing::random_dataset({}, seed);
    const auto [g0, g1] = ml::group_split(ds);
    EXPECT_EQ(g0.size() + g1.size(), ds.size());
    for (const auto& id : g0) EXPECT_EQ(ds.at(id).attribute, 0);
    for (const auto& id : g1) EXPECT_EQ(ds.at(id).attribute, 1);
  }
}

TEST(Dataset, ValidationErrors) {
  std::vector<ml::Sample> dup{scalar_sample("s", "a", 0, 0), scalar_sample("s", "b", 1, 0)};
  EXPECT_ML_ERROR(ml::Dataset({}, dup), ErrorCode::DuplicateId);

  std::vector<ml::Sample> shapes{scalar_sample("s0", "a", 0, 0),
                                 ml::testing::make_sample("s1", "b", 1, Eigen::MatrixXd::Zero(1, 2),
                                                          Eigen::VectorXd::Zero(1))};
  EXPECT_ML_ERROR(ml::Dataset({}, shapes), ErrorCode::ShapeError);

  std::vector<ml::Sample> nonbinary{scalar_sample("s0", "a", 0, 0, 0, {0.5})};
  EXPECT_ML_ERROR(ml::Dataset({{"c", ml::CovariateKind::Binary}}, nonbinary), ErrorCode::InvalidArgument);

  std::vector<ml::Sample> attr{scalar_sample("s0", "a", 2, 0)};
  EXPECT_ML_ERROR(ml::Dataset({}, attr), ErrorCode::InvalidArgument);
}

TEST(Dataset, CovariateLookup) {
  const auto ds = two_sample_dataset();
  EXPECT_EQ(ds.covariate(ds.at("a"), "age"), 31.5);
  EXPECT_EQ(ds.covariate_index("smile"), 0u);
  EXPECT_FALSE(ds.covariate_index("height"));
  EXPECT_ML_ERROR(ds.covariate(ds.at("a"), "height"), ErrorCode::UnknownId);
}

TEST(DatasetIo, SaveThenLoadIsExact) {
  ml::testing::TempDir dir;
  const auto ds = two_sample_dataset();
  const auto manifest = ml::save_dataset(ds, dir.path());
  const auto back = ml::load_dataset(manifest);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.covariate_specs(), ds.covariate_specs());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back[i].sample_id, ds[i].sample_id);
    EXPECT_EQ(back[i].identity_id, ds[i].identity_id);
    EXPECT_EQ(back[i].attribute, ds[i].attribute);
    EXPECT_EQ(back[i].default_attrs_ok, ds[i].default_attrs_ok);
    EXPECT_EQ(back[i].latent, ds[i].latent);
    EXPECT_EQ(back[i].facerec, ds[i].facerec);
    EXPECT_EQ(back[i].covariates, ds[i].covariates);
  }
  EXPECT_EQ(back.identity_index(), ds.identity_index());
}

TEST(DatasetIo, RandomFloat32DatasetsRoundTrip) {
  ml::testing::TempDir dir;
  auto ds = ml::testing::random_dataset({}, 5);
  std::vector<ml::Sample> rounded(ds.samples());
  for (auto& s : rounded) {
    s.latent = ml::LatentCode(s.latent.expanded().unaryExpr(&ml::io::to_f32));
    s.facerec = s.facerec.unaryExpr(&ml::io::to_f32);
  }
  const ml::Dataset f32({}, rounded);
  const auto back = ml::load_dataset(ml::save_dataset(f32, dir.path()));
  for (std::size_t i = 0; i < f32.size(); ++i) {
    EXPECT_EQ(back[i].latent, f32[i].latent);
    EXPECT_EQ(back[i].facerec, f32[i].facerec);
  }
}

TEST(DatasetIo, WrongLatentShapeIsAShapeError) {
  ml::testing::TempDir dir;
  ml::write_latent(dir.path() / "a.mlat", ml::LatentCode(Eigen::MatrixXd::Zero(2, 3)));
  ml::write_latent(dir.path() / "b.mlat", ml::LatentCode(Eigen::MatrixXd::Zero(2, 4)));
  ml::write_facerec(dir.path() / "f.mfrv", Eigen::VectorXd::Zero(4));
  write_manifest(dir.path() / "m.csv", "a,p,0,1,a.mlat,f.mfrv\nb,q,1,1,b.mlat,f.mfrv\n");
  EXPECT_ML_ERROR(ml::load_dataset(dir.path() / "m.csv"), ErrorCode::ShapeError);
}

TEST(DatasetIo, DuplicateRowsAreRejected) {
  ml::testing::TempDir dir;
  ml::write_latent(dir.path() / "a.mlat", ml::LatentCode(Eigen::MatrixXd::Zero(2, 3)));
  ml::write_facerec(dir.path() / "f.mfrv", Eigen::VectorXd::Zero(4));
  write_manifest(dir.path() / "m.csv", "a,p,0,1,a.mlat,f.mfrv\na,q,1,1,a.mlat,f.mfrv\n");
  EXPECT_ML_ERROR(ml::load_dataset(dir.path() / "m.csv"), ErrorCode::DuplicateId);
}

TEST(DatasetIo, MalformedManifestsAreParseErrors) {
  ml::testing::TempDir dir;
  ml::write_latent(dir.path() / "a.mlat", ml::LatentCode(Eigen::MatrixXd::Zero(2, 3)));
  ml::write_facerec(dir.path() / "f.csv", Eigen::VectorXd::Zero(4));
  write_manifest(dir.path() / "m.csv", "a,p,yes,1,a.mlat,f.csv\n");
  EXPECT_ML_ERROR(ml::load_dataset(dir.path() / "m.csv"), ErrorCode::ParseError);
  write_manifest(dir.path() / "m.csv", "a,p,0,1,a.mlat\n");
  EXPECT_ML_ERROR(ml::load_dataset(dir.path() / "m.csv"), ErrorCode::ParseError);
  ml::io::write_text(dir.path() / "m.csv", "id,identity\n");
  EXPECT_ML_ERROR(ml::load_dataset(dir.path() / "m.csv"), ErrorCode::ParseError);
  ml::io::write_text(dir.path() / "m.csv",
                     "sample_id,identity_id,attribute,default_attrs_ok,latent_path,facerec_path,smile\n"
                     "a,p,0,1,a.mlat,f.csv,1\n");
  EXPECT_ML_ERROR(ml::load_dataset(dir.path() / "m.csv"), ErrorCode::ParseError);
}

TEST(DatasetIo, MissingManifestIsAnIoError) {
  EXPECT_ML_ERROR(ml::load_dataset("/nonexistent/manifest.csv"), ErrorCode::IoError);
}

TEST(FacerecIo, BinaryAndCsvRoundTrip) {
  ml::testing::TempDir dir;
  Eigen::VectorXd v(3);
  v << 0.5, -1.25, 3;
  ml::write_facerec(dir.path() / "v.mfrv", v);
  EXPECT_EQ(ml::read_facerec(dir.path() / "v.mfrv"), v);
  ml::io::write_text(dir.path() / "v.csv", "0.5,-1.25,3\n");
  EXPECT_EQ(ml::read_facerec(dir.path() / "v.csv"), v);
}
