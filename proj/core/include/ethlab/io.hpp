#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethlab/spectral_core.hpp"

namespace ethlab::io {

// Matrix fixture layout (all little-endian):
//   char[8]  magic "ETHLMAT\0"
//   uint32   version (1)
//   uint32   element type (1 = complex128)
//   uint64   dim
//   dim*dim  row-major (re, im) float64 pairs
inline constexpr char kMatrixMagic[8] = {'E', 'T', 'H', 'L', 'M', 'A', 'T', '\0'};
inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::uint32_t kComplex128 = 1;

std::string encode_matrix(const ComplexMatrix& m);
ComplexMatrix decode_matrix(std::string_view bytes);

void write_matrix(const std::filesystem::path& path, const ComplexMatrix& m);
ComplexMatrix read_matrix(const std::filesystem::path& path);

/// 17 significant digits, '.' separator, locale independent.
std::string format_double(double v);
double parse_double(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws ValidationError when absent.
  std::size_t column(std::string_view name) const;
};

std::string encode_csv(const CsvTable& table);
CsvTable decode_csv(std::string_view text);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Two-space indented dump with a trailing newline.
std::string encode_json(const nlohmann::json& j);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);

}  // namespace ethlab::io
