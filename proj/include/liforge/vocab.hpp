// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "liforge/types.hpp"

namespace liforge {

/// Token <-> id map with five reserved ids.
class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kMask = 1;
  static constexpr std::int32_t kUnk = 2;
  static constexpr std::int32_t kQueryMarker = 3;
  static constexpr std::int32_t kDocMarker = 4;
  static constexpr std::int32_t kReserved = 5;

  Vocab();

  /// Every distinct lowercased whitespace token of `texts`, ids assigned in
  /// ascending lexicographic order after the reserved block.
  static Vocab build(const std::vector<std::string>& texts);

  /// Appends `token` if new; returns its id. Reserved spellings are rejected.
  std::int32_t add(const std::string& token);

  std::int32_t id(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const noexcept { return id_to_token_.size(); }

  /// One token per line, line index = id (reserved lines included).
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::unordered_map<std::string, std::int32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
};

/// Whitespace split + ASCII lowercase; unknown tokens map to Vocab::kUnk.
TokenIds tokenize(std::string_view text, const Vocab& vocab);

/// The lowercased whitespace tokens themselves (shared with BM25).
std::vector<std::string> split_tokens(std::string_view text);

}  // namespace liforge
