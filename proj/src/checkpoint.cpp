// SPDX-License-Identifier: Apache-2.0
#include "liforge/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "liforge/error.hpp"

namespace liforge {
namespace {

constexpr char kMagic[8] = {'L', 'I', 'F', 'O', 'R', 'G', 'E', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f32_le(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::int64_t shape_product(const std::vector<std::int64_t>& shape, const std::string& name) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw FormatError("tensors." + name + ".shape", "negative dimension");
    n *= d;
  }
  return n;
}

}  // namespace

std::int64_t Tensor::element_count() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

bool bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
  if (!(a.meta == b.meta) || a.tensors.size() != b.tensors.size()) return false;
  for (auto ita = a.tensors.begin(), itb = b.tensors.begin(); ita != a.tensors.end(); ++ita, ++itb) {
    if (ita->first != itb->first || ita->second.shape != itb->second.shape) return false;
    const auto& va = ita->second.values;
    const auto& vb = itb->second.values;
    if (va.size() != vb.size()) return false;
    if (!va.empty() && std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json header;
  header["meta"] = {{"step", ckpt.meta.step},
                    {"seed", ckpt.meta.seed},
                    {"config_digest", ckpt.meta.config_digest},
                    {"source_steps", ckpt.meta.source_steps}};
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    if (t.element_count() != static_cast<std::int64_t>(t.values.size())) {
      throw std::invalid_argument("tensor '" + name + "': value count does not match shape");
    }
    header["tensors"].push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
    offset += 4 * t.values.size();
  }
  const std::string text = header.dump();

  std::string out;
  out.reserve(16 + text.size() + offset);
  out.append(kMagic, 8);
  put_u64_le(out, text.size());
  out += text;
  for (const auto& [name, t] : ckpt.tensors) {
    for (float f : t.values) put_f32_le(out, f);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8 || std::memcmp(p, kMagic, 8) != 0) {
    throw FormatError("magic", "expected LIFORGE1");
  }
  if (bytes.size() < 16) throw FormatError("header_length", "file truncated before header length");
  const std::uint64_t header_len = get_u64_le(p + 8);
  if (header_len > bytes.size() - 16) {
    throw FormatError("header_length", "header length " + std::to_string(header_len) +
                                           " exceeds file size");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("header", e.what());
  }

  Checkpoint ckpt;
  const std::uint64_t payload_start = 16 + header_len;
  const std::uint64_t payload_size = bytes.size() - payload_start;
  try {
    const auto& meta = header.at("meta");
    ckpt.meta.step = meta.at("step").get<std::int64_t>();
    ckpt.meta.seed = meta.at("seed").get<std::int64_t>();
    ckpt.meta.config_digest = meta.at("config_digest").get<std::string>();
    if (meta.contains("source_steps")) {
      ckpt.meta.source_steps = meta.at("source_steps").get<std::vector<std::int64_t>>();
    }
    std::uint64_t expected_offset = 0;
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      Tensor t;
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      if (offset != expected_offset) {
        throw FormatError("tensors." + name + ".offset",
                          "expected " + std::to_string(expected_offset) + ", found " + std::to_string(offset));
      }
      const auto count = static_cast<std::uint64_t>(shape_product(t.shape, name));
      if (offset + 4 * count > payload_size) {
        throw FormatError("tensors." + name + ".shape", "payload truncated");
      }
      t.values.resize(count);
      const unsigned char* src = p + payload_start + offset;
      for (std::uint64_t i = 0; i < count; ++i) t.values[i] = get_f32_le(src + 4 * i);
      expected_offset += 4 * count;
      if (!ckpt.tensors.emplace(name, std::move(t)).second) {
        throw FormatError("tensors." + name, "duplicate tensor name");
      }
    }
    if (expected_offset != payload_size) {
      throw FormatError("payload", std::to_string(payload_size - expected_offset) + " trailing bytes");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("header", e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

Checkpoint average_checkpoints(const std::vector<Checkpoint>& ckpts) {
  if (ckpts.empty()) throw std::invalid_argument("average_checkpoints: no checkpoints");
  const auto& first = ckpts.front();
  for (std::size_t k = 1; k < ckpts.size(); ++k) {
    const auto& c = ckpts[k];
    for (const auto& [name, t] : first.tensors) {
      auto it = c.tensors.find(name);
      if (it == c.tensors.end()) {
        throw std::invalid_argument("average_checkpoints: tensor '" + name + "' missing from checkpoint " +
                                    std::to_string(k));
      }
      if (it->second.shape != t.shape) {
        throw std::invalid_argument("average_checkpoints: tensor '" + name + "' shape mismatch in checkpoint " +
                                    std::to_string(k));
      }
    }
    for (const auto& [name, t] : c.tensors) {
      if (first.tensors.count(name) == 0) {
        throw std::invalid_argument("average_checkpoints: unexpected tensor '" + name + "' in checkpoint " +
                                    std::to_string(k));
      }
    }
  }

  Checkpoint out;
  const double k = static_cast<double>(ckpts.size());
  std::vector<double> column(ckpts.size());
  for (const auto& [name, t] : first.tensors) {
    Tensor avg;
    avg.shape = t.shape;
    avg.values.resize(t.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      for (std::size_t c = 0; c < ckpts.size(); ++c) column[c] = ckpts[c].tensors.at(name).values[i];
      std::sort(column.begin(), column.end());
      double sum = column[0];  // not 0.0: keeps the sign of an all -0 column
      for (std::size_t c = 1; c < column.size(); ++c) sum += column[c];
      avg.values[i] = static_cast<float>(sum / k);
    }
    out.tensors.emplace(name, std::move(avg));
  }

  // Provenance is the set of training steps behind each input; a single
  // distinct step leaves source_steps empty so averaging identical
  // checkpoints reproduces the input exactly.
  std::set<std::int64_t> provenance;
  std::int64_t max_step = first.meta.step;
  std::int64_t min_seed = first.meta.seed;
  bool same_digest = true;
  for (const auto& c : ckpts) {
    if (c.meta.source_steps.empty()) {
      provenance.insert(c.meta.step);
    } else {
      provenance.insert(c.meta.source_steps.begin(), c.meta.source_steps.end());
    }
    max_step = std::max(max_step, c.meta.step);
    min_seed = std::min(min_seed, c.meta.seed);
    same_digest = same_digest && c.meta.config_digest == first.meta.config_digest;
  }
  out.meta.step = max_step;
  out.meta.seed = min_seed;
  out.meta.config_digest = same_digest ? first.meta.config_digest : "mixed";
  if (provenance.size() > 1) out.meta.source_steps.assign(provenance.begin(), provenance.end());
  return out;
}

}  // namespace liforge
