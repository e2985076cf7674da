#include "ethlab/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include "ethlab/errors.hpp"

namespace ethlab::io {

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <class T>
void put(std::string& out, T v) {
  v = to_little(v);
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <class T>
T take(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw ValidationError("matrix file is truncated");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return to_little(v);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(sep, start);
    out.push_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string encode_matrix(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw ValidationError("matrix fixtures must be square");
  std::string out;
  const auto d = static_cast<std::uint64_t>(m.rows());
  out.reserve(24 + d * d * 16);
  out.append(kMatrixMagic, sizeof kMatrixMagic);
  put(out, kMatrixVersion);
  put(out, kComplex128);
  put(out, d);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      put(out, m(i, j).real());
      put(out, m(i, j).imag());
    }
  }
  return out;
}

ComplexMatrix decode_matrix(std::string_view bytes) {
  if (bytes.size() < sizeof kMatrixMagic || std::memcmp(bytes.data(), kMatrixMagic, sizeof kMatrixMagic) != 0) {
    throw ValidationError("not an ethlab matrix file (bad magic)");
  }
  std::size_t pos = sizeof kMatrixMagic;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kMatrixVersion) throw ValidationError("unsupported matrix file version " + std::to_string(version));
  const auto type = take<std::uint32_t>(bytes, pos);
  if (type != kComplex128) throw ValidationError("unsupported matrix element type " + std::to_string(type));
  const auto d = take<std::uint64_t>(bytes, pos);
  if (d > static_cast<std::uint64_t>(kMaxDenseDim)) throw ValidationError("matrix dimension too large");
  if (bytes.size() != pos + d * d * 16) throw ValidationError("matrix file size does not match its header");
  const auto n = static_cast<Index>(d);
  ComplexMatrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double re = take<double>(bytes, pos);
      const double im = take<double>(bytes, pos);
      m(i, j) = {re, im};
    }
  }
  return m;
}

void write_matrix(const std::filesystem::path& path, const ComplexMatrix& m) { write_file(path, encode_matrix(m)); }

ComplexMatrix read_matrix(const std::filesystem::path& path) { return decode_matrix(read_file(path)); }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ValidationError("malformed number '" + std::string(text) + "'");
  }
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ValidationError("CSV has no column '" + std::string(name) + "'");
}

std::string encode_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw ValidationError("CSV row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

CsvTable decode_csv(std::string_view text) {
  CsvTable table;
  bool first = true;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (first) {
      for (const auto f : fields) table.header.emplace_back(f);
      first = false;
      continue;
    }
    if (fields.size() != table.header.size()) throw ValidationError("CSV row width does not match header");
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto f : fields) row.push_back(parse_double(f));
    table.rows.push_back(std::move(row));
  }
  if (first) throw ValidationError("CSV is empty");
  return table;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) { write_file(path, encode_csv(table)); }

CsvTable read_csv(const std::filesystem::path& path) { return decode_csv(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::string encode_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_file(path, encode_json(j)); }

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

}  // namespace ethlab::io
