// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace structex {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// Digest over every regular file below `root`: relative path and content
// hash, visited in sorted path order.
std::string hash_tree(const std::filesystem::path& root);

}  // namespace structex
