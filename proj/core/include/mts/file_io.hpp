#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace mts {

/// Pretty-printed with a trailing newline. Throws std::runtime_error when the
/// path cannot be written.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Throws std::runtime_error when unreadable and nlohmann::json::parse_error
/// on malformed content.
nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mts
