// SPDX-License-Identifier: Apache-2.0
#include "liforge/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <stdexcept>

#include "liforge/error.hpp"

namespace liforge {
namespace {

constexpr const char* kReservedNames[] = {"[PAD]", "[MASK]", "[UNK]", "[Q]", "[D]"};

}  // namespace

Vocab::Vocab() {
  for (const char* name : kReservedNames) {
    token_to_id_.emplace(name, static_cast<std::int32_t>(id_to_token_.size()));
    id_to_token_.emplace_back(name);
  }
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
  std::set<std::string> distinct;
  for (const auto& t : texts) {
    for (auto& tok : split_tokens(t)) distinct.insert(std::move(tok));
  }
  Vocab v;
  for (const auto& tok : distinct) v.add(tok);
  return v;
}

std::int32_t Vocab::add(const std::string& token) {
  if (token.empty()) throw std::invalid_argument("Vocab::add: empty token");
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) {
    if (it->second < kReserved) {
      throw std::invalid_argument("Vocab::add: '" + token + "' is a reserved token");
    }
    return it->second;
  }
  const auto id = static_cast<std::int32_t>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(token);
  return id;
}

std::int32_t Vocab::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end() || it->second < kReserved) return kUnk;
  return it->second;
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw std::invalid_argument("Vocab::token: id out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write vocab file " + path);
  for (const auto& t : id_to_token_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open vocab file " + path);
  Vocab v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (lineno < static_cast<std::size_t>(kReserved)) {
      if (line != kReservedNames[lineno]) {
        throw FormatError("vocab line " + std::to_string(lineno + 1),
                          "expected reserved token " + std::string(kReservedNames[lineno]));
      }
    } else {
      if (v.token_to_id_.count(line) != 0) {
        throw FormatError("vocab line " + std::to_string(lineno + 1), "duplicate token " + line);
      }
      v.add(line);
    }
    ++lineno;
  }
  if (lineno < static_cast<std::size_t>(kReserved)) {
    throw FormatError("vocab", "missing reserved tokens");
  }
  return v;
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TokenIds tokenize(std::string_view text, const Vocab& vocab) {
  TokenIds ids;
  for (const auto& tok : split_tokens(text)) ids.push_back(vocab.id(tok));
  return ids;
}

}  // namespace liforge
