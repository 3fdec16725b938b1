// SPDX-License-Identifier: Apache-2.0
#include "structex/hashing.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "structex/error.hpp"
#include "structex/jsonl.hpp"

namespace structex {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kInvalidInput, "sha256 digest failed");
  }
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string hash_tree(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), root));
  }
  std::sort(files.begin(), files.end());
  std::string manifest;
  for (const auto& rel : files) {
    manifest += rel.generic_string();
    manifest += ' ';
    manifest += sha256_hex(read_text_file(root / rel));
    manifest += '\n';
  }
  return sha256_hex(manifest);
}

}  // namespace structex
