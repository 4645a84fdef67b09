#include "matchlab/dataset.hpp"

#include <cmath>
#include <string>

#include "matchlab/error.hpp"
#include "matchlab/io.hpp"

namespace matchlab {
namespace {

constexpr std::string_view kFixedColumns[] = {"sample_id",  "identity_id", "attribute",
                                              "default_attrs_ok", "latent_path", "facerec_path"};
constexpr std::size_t kNumFixed = std::size(kFixedColumns);

CovariateSpec parse_covariate_header(const std::string& column) {
  const auto colon = column.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error(ErrorCode::ParseError, "covariate column '" + column + "' needs a ':bin' or ':real' suffix");
  }
  const std::string suffix = column.substr(colon + 1);
  CovariateSpec spec{column.substr(0, colon), CovariateKind::Real};
  if (suffix == "bin") {
    spec.kind = CovariateKind::Binary;
  } else if (suffix != "real") {
    throw Error(ErrorCode::ParseError, "unknown covariate type '" + suffix + "' in column " + column);
  }
  return spec;
}

bool parse_bool(const std::string& field, const std::string& context) {
  if (field == "1" || field == "true") return true;
  if (field == "0" || field == "false") return false;
  throw Error(ErrorCode::ParseError, context + ": expected 0/1, got '" + field + "'");
}

}  // namespace

Dataset::Dataset(std::vector<CovariateSpec> covariate_specs, std::vector<Sample> samples)
    : specs_(std::move(covariate_specs)), samples_(std::move(samples)) {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (specs_[i].name == specs_[j].name) {
        throw Error(ErrorCode::DuplicateId, "covariate '" + specs_[i].name + "' declared twice");
      }
    }
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.sample_id.empty()) throw Error(ErrorCode::ParseError, "empty sample_id at row " + std::to_string(i));
    if (!by_id_.emplace(s.sample_id, i).second) {
      throw Error(ErrorCode::DuplicateId, "sample_id '" + s.sample_id + "' appears more than once");
    }
    if (s.attribute != 0 && s.attribute != 1) {
      throw Error(ErrorCode::InvalidArgument, s.sample_id + ": attribute must be 0 or 1");
    }
    if (i == 0) {
      levels_ = s.latent.levels();
      dims_ = s.latent.dims();
      facerec_dim_ = static_cast<int>(s.facerec.size());
    } else if (s.latent.levels() != levels_ || s.latent.dims() != dims_) {
      throw Error(ErrorCode::ShapeError, s.sample_id + ": latent shape " + std::to_string(s.latent.levels()) +
                                             "x" + std::to_string(s.latent.dims()) + " differs from " +
                                             std::to_string(levels_) + "x" + std::to_string(dims_));
    } else if (s.facerec.size() != facerec_dim_) {
      throw Error(ErrorCode::ShapeError, s.sample_id + ": recognition embedding length differs");
    }
    if (!s.facerec.allFinite()) throw Error(ErrorCode::NonFinite, s.sample_id + ": non-finite embedding");
    if (s.covariates.size() != specs_.size()) {
      throw Error(ErrorCode::ShapeError, s.sample_id + ": covariate count does not match the schema");
    }
    for (std::size_t c = 0; c < specs_.size(); ++c) {
      const double v = s.covariates[c];
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, s.sample_id + ": non-finite " + specs_[c].name);
      if (specs_[c].kind == CovariateKind::Binary && v != 0.0 && v != 1.0) {
        throw Error(ErrorCode::InvalidArgument, s.sample_id + ": binary covariate " + specs_[c].name +
                                                    " must be 0 or 1");
      }
    }
    identity_index_[s.identity_id].push_back(s.sample_id);
  }
}

const Sample& Dataset::at(std::string_view sample_id) const { return samples_[index_of(sample_id)]; }

std::size_t Dataset::index_of(std::string_view sample_id) const {
  const auto it = by_id_.find(std::string(sample_id));
  if (it == by_id_.end()) throw Error(ErrorCode::UnknownId, "unknown sample_id '" + std::string(sample_id) + "'");
  return it->second;
}

bool Dataset::contains(std::string_view sample_id) const { return by_id_.count(std::string(sample_id)) > 0; }

std::optional<std::size_t> Dataset::covariate_index(std::string_view name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == name) return i;
  }
  return std::nullopt;
}

double Dataset::covariate(const Sample& s, std::string_view name) const {
  const auto idx = covariate_index(name);
  if (!idx) throw Error(ErrorCode::UnknownId, "unknown covariate '" + std::string(name) + "'");
  return s.covariates[*idx];
}

std::pair<std::vector<std::string>, std::vector<std::string>> group_split(const Dataset& ds) {
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (const auto& s : ds.samples()) {
    (s.attribute == 0 ? out.first : out.second).push_back(s.sample_id);
  }
  return out;
}

void write_facerec(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  io::write_f32_blob(path, "MFRV", {static_cast<std::uint32_t>(v.size())}, v.transpose());
}

Eigen::VectorXd read_facerec(const std::filesystem::path& path) {
  if (io::has_magic(path, "MFRV")) {
    const auto blob = io::read_f32_blob(path, "MFRV", 1);
    Eigen::VectorXd v(static_cast<Eigen::Index>(blob.values.size()));
    for (std::size_t i = 0; i < blob.values.size(); ++i) v[static_cast<Eigen::Index>(i)] = blob.values[i];
    return v;
  }
  const auto rows = io::read_csv(path);
  std::vector<double> values;
  for (const auto& row : rows)
    for (const auto& f : row) values.push_back(io::parse_double(f, path.string()));
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const auto rows = io::read_csv(manifest_path);
  if (rows.empty()) throw Error(ErrorCode::ParseError, manifest_path.string() + ": empty manifest");
  const auto& header = rows.front();
  if (header.size() < kNumFixed) {
    throw Error(ErrorCode::ParseError, manifest_path.string() + ": manifest header is missing columns");
  }
  for (std::size_t i = 0; i < kNumFixed; ++i) {
    if (header[i] != kFixedColumns[i]) {
      throw Error(ErrorCode::ParseError, manifest_path.string() + ": expected column '" +
                                             std::string(kFixedColumns[i]) + "' at position " + std::to_string(i));
    }
  }
  std::vector<CovariateSpec> specs;
  for (std::size_t i = kNumFixed; i < header.size(); ++i) specs.push_back(parse_covariate_header(header[i]));

  const auto base = manifest_path.parent_path();
  std::vector<Sample> samples;
  samples.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string ctx = manifest_path.string() + " row " + std::to_string(r);
    if (row.size() != header.size()) throw Error(ErrorCode::ParseError, ctx + ": wrong number of fields");
    Sample s;
    s.sample_id = row[0];
    s.identity_id = row[1];
    const auto attr = io::parse_int(row[2], ctx + " attribute");
    if (attr != 0 && attr != 1) throw Error(ErrorCode::ParseError, ctx + ": attribute must be 0 or 1");
    s.attribute = static_cast<int>(attr);
    s.default_attrs_ok = parse_bool(row[3], ctx + " default_attrs_ok");
    s.latent = read_latent(base / row[4]);
    if (!row[5].empty()) s.facerec = read_facerec(base / row[5]);
    for (std::size_t c = kNumFixed; c < row.size(); ++c) {
      s.covariates.push_back(io::parse_double(row[c], ctx + " " + header[c]));
    }
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(specs), std::move(samples));
}

std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                                   const std::string& manifest_name) {
  std::filesystem::create_directories(dir / "latents");
  std::filesystem::create_directories(dir / "facerec");
  std::string text;
  for (std::size_t i = 0; i < kNumFixed; ++i) {
    if (i) text += ',';
    text += kFixedColumns[i];
  }
  for (const auto& spec : ds.covariate_specs()) {
    text += ',' + spec.name + (spec.kind == CovariateKind::Binary ? ":bin" : ":real");
  }
  text += '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds[i];
    const std::string stem = "s" + std::to_string(i);
    const std::string latent_rel = "latents/" + stem + ".mlat";
    write_latent(dir / latent_rel, s.latent);
    std::string facerec_rel;
    if (s.facerec.size() > 0) {
      facerec_rel = "facerec/" + stem + ".mfrv";
      write_facerec(dir / facerec_rel, s.facerec);
    }
    text += s.sample_id + ',' + s.identity_id + ',' + std::to_string(s.attribute) + ',' +
            (s.default_attrs_ok ? "1" : "0") + ',' + latent_rel + ',' + facerec_rel;
    for (double v : s.covariates) text += ',' + io::format_double(v);
    text += '\n';
  }
  const auto manifest = dir / manifest_name;
  io::write_text(manifest, text);
  return manifest;
}

}  // namespace matchlab
