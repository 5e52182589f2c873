#include "recourse/common/serialization.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "recourse/common/error.hpp"

namespace recourse {

std::string to_hex_float(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%a", value);
  return buffer;
}

double from_hex_float(std::string_view text) {
  const std::string owned(text);
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(owned.c_str(), &end);
  if (owned.empty() || end != owned.c_str() + owned.size() || errno == ERANGE) {
    throw Error(ErrorCode::kCorruptArtifact, "malformed number '" + owned + "'");
  }
  return value;
}

json hex_array(std::span<const double> values) {
  json out = json::array();
  for (double v : values) out.push_back(to_hex_float(v));
  return out;
}

std::vector<double> parse_hex_array(const json& node) {
  if (!node.is_array()) {
    throw Error(ErrorCode::kCorruptArtifact, "expected an array of hex floats");
  }
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& item : node) {
    if (!item.is_string()) {
      throw Error(ErrorCode::kCorruptArtifact, "expected hex-float string");
    }
    out.push_back(from_hex_float(item.get<std::string>()));
  }
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

std::string json_fingerprint(const json& document) {
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  return fnv1a_hex(document.dump());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open '" + path + "'", path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kConfigError, "cannot write '" + path + "'", path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

}  // namespace recourse
