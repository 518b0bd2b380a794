#pragma once

// JSONL and plain-file I/O. Writes go to a sibling temp file that is renamed
// into place, so readers never see a truncated file.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace prmkit {

// Blank lines are skipped. Throws IOFailure naming the file and line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

// Creates parent directories as needed.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);
void write_jsonl_atomic(const std::filesystem::path& path, std::span<const nlohmann::json> rows);

// Compact single-line dump; invalid UTF-8 is replaced rather than thrown on.
std::string dump_line(const nlohmann::json& doc);

}  // namespace prmkit
