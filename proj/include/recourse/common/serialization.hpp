#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace recourse {

using json = nlohmann::json;

// Doubles are written as C99 hex-float strings ("0x1.8p+1") so artifacts
// round-trip bit-exactly.
std::string to_hex_float(double value);
double from_hex_float(std::string_view text);

json hex_array(std::span<const double> values);
std::vector<double> parse_hex_array(const json& node);

// FNV-1a 64-bit, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Fingerprint of a JSON document: hash of its canonical (sorted-key,
// compact) serialization, so formatting differences do not matter.
std::string json_fingerprint(const json& document);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace recourse
