#include "matchlab/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "matchlab/error.hpp"

namespace matchlab::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                  static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(bytes.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    if (!line.empty()) {
      CsvRow row;
      std::size_t f = 0;
      while (true) {
        const auto comma = line.find(',', f);
        const auto cut = comma == std::string_view::npos ? line.size() : comma;
        row.emplace_back(trim(line.substr(f, cut - f)));
        if (comma == std::string_view::npos) break;
        f = comma + 1;
      }
      rows.push_back(std::move(row));
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return rows;
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view field, std::string_view context) {
  field = trim(field);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw Error(ErrorCode::ParseError, std::string(context) + ": not a number: '" + std::string(field) + "'");
  }
  return v;
}

long long parse_int(std::string_view field, std::string_view context) {
  field = trim(field);
  long long v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw Error(ErrorCode::ParseError, std::string(context) + ": not an integer: '" + std::string(field) + "'");
  }
  return v;
}

Eigen::MatrixXd parse_matrix(const std::vector<CsvRow>& rows, std::string_view context) {
  if (rows.empty()) throw Error(ErrorCode::ParseError, std::string(context) + ": no rows");
  const auto width = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw Error(ErrorCode::ParseError, std::string(context) + ": ragged row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < width; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(rows[r][c], context);
    }
  }
  return m;
}

std::string format_matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_f32_blob(const std::filesystem::path& path, std::string_view magic,
                    const std::vector<std::uint32_t>& dims, const Eigen::MatrixXd& values) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(magic.data(), 4);
  for (auto d : dims) put_u32(out, d);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values(r, c)));
      put_u32(out, bits);
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

bool has_magic(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 4> head{};
  in.read(head.data(), 4);
  return in.gcount() == 4 && std::memcmp(head.data(), magic.data(), 4) == 0;
}

F32Blob read_f32_blob(const std::filesystem::path& path, std::string_view magic, std::size_t n_dims) {
  const std::string bytes = read_text(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t header = 4 + 4 * n_dims;
  if (bytes.size() < header || std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw Error(ErrorCode::ParseError, path.string() + ": missing " + std::string(magic) + " header");
  }
  F32Blob blob;
  std::size_t count = 1;
  for (std::size_t i = 0; i < n_dims; ++i) {
    blob.dims.push_back(get_u32(p + 4 + 4 * i));
    count *= blob.dims.back();
  }
  if (bytes.size() != header + 4 * count) {
    throw Error(ErrorCode::ParseError, path.string() + ": payload size does not match header");
  }
  blob.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    blob.values[i] = std::bit_cast<float>(get_u32(p + header + 4 * i));
  }
  return blob;
}

}  // namespace matchlab::io
