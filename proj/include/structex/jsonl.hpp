// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace structex {

using Json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames into place, so readers never
// observe a half-written file.
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::vector<Json> read_jsonl(const std::filesystem::path& path);
std::vector<Json> parse_jsonl(std::string_view text, std::string_view source = "<memory>");

std::string to_jsonl(const std::vector<Json>& records);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

}  // namespace structex
