#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace matchlab::io {

using CsvRow = std::vector<std::string>;

/// Comma-separated rows; fields are trimmed, blank lines skipped. Quoting is
/// not supported (ids and names must not contain commas).
std::vector<CsvRow> read_csv(const std::filesystem::path& path);
std::vector<CsvRow> parse_csv(std::string_view text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

/// Parses every field of every row as a double; all rows must share a width.
Eigen::MatrixXd parse_matrix(const std::vector<CsvRow>& rows, std::string_view context);
std::string format_matrix_csv(const Eigen::MatrixXd& m);

// Little-endian binary blobs: 4-byte magic, u32 dims..., float32 payload.
void write_f32_blob(const std::filesystem::path& path, std::string_view magic,
                    const std::vector<std::uint32_t>& dims, const Eigen::MatrixXd& row_major_values);
struct F32Blob {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};
F32Blob read_f32_blob(const std::filesystem::path& path, std::string_view magic, std::size_t n_dims);
bool has_magic(const std::filesystem::path& path, std::string_view magic);

/// Rounds to the nearest float32, the precision of the binary formats.
inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace matchlab::io
