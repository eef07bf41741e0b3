#pragma once

// Internal helpers shared by the document readers.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "negsim/error.hpp"

namespace negsim::detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Parses JSON, converting syntax errors into ParseError with "line:col".
json parse_json_document(std::string_view text);

/// Converts a byte offset into a 1-based "line:col" string.
std::string line_col(std::string_view text, std::size_t byte_offset);

const json& require_field(const json& obj, const char* key, const std::string& path);
std::string require_string(const json& obj, const char* key, const std::string& path);
std::string optional_string(const json& obj, const char* key, const std::string& path,
                            std::string fallback = {});

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 1469598103934665603ULL);
std::string hex64(std::uint64_t value);

/// One JSON object per line, no trailing whitespace.
std::string jsonl_line(const json& record);

}  // namespace negsim::detail
