#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace lvpq::io {

nlohmann::json read_json_file(const std::filesystem::path& path);

/// Fixed indent plus trailing newline: identical documents give identical bytes.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace lvpq::io
