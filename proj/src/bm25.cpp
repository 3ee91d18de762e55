// SPDX-License-Identifier: Apache-2.0
#include "liforge/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <json.hpp>

#include "liforge/error.hpp"
#include "liforge/vocab.hpp"

namespace liforge {

Bm25Index Bm25Index::build(const std::vector<Document>& corpus, Bm25Params params) {
  if (corpus.empty()) throw std::invalid_argument("Bm25Index: empty corpus");
  if (!(params.k1 >= 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
    throw std::invalid_argument("Bm25Index: need k1 >= 0 and b in [0, 1]");
  }
  std::vector<const Document*> sorted;
  for (const auto& d : corpus) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(), [](const Document* a, const Document* b) { return a->id < b->id; });

  Bm25Index idx;
  idx.params_ = params;
  double total_len = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& d = *sorted[i];
    if (!idx.doc_lookup_.emplace(d.id, static_cast<std::uint32_t>(i)).second) {
      throw DataError("Bm25Index: duplicate doc id " + d.id);
    }
    idx.doc_ids_.push_back(d.id);
    std::map<std::string, std::uint32_t> tf;
    const auto terms = split_tokens(d.text);
    for (const auto& t : terms) ++tf[t];
    idx.doc_len_.push_back(static_cast<std::uint32_t>(terms.size()));
    total_len += static_cast<double>(terms.size());
    for (const auto& [term, count] : tf) idx.postings_[term].push_back({static_cast<std::uint32_t>(i), count});
  }
  idx.avg_len_ = total_len / static_cast<double>(sorted.size());
  if (!(idx.avg_len_ > 0.0)) throw DataError("Bm25Index: corpus has no terms");
  return idx;
}

const std::vector<Posting>* Bm25Index::postings(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

double Bm25Index::idf(const std::string& term) const {
  const auto* p = postings(term);
  const double df = p ? static_cast<double>(p->size()) : 0.0;
  const double n = static_cast<double>(doc_ids_.size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::term_weight(double idf, std::uint32_t tf, std::uint32_t doc) const {
  const double f = tf;
  const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_len_[doc]) / avg_len_;
  return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

std::uint32_t Bm25Index::doc_index(const std::string& doc_id) const {
  auto it = doc_lookup_.find(doc_id);
  if (it == doc_lookup_.end()) throw std::invalid_argument("bm25: unknown doc id " + doc_id);
  return it->second;
}

double Bm25Index::score(const std::vector<std::string>& query_terms, const std::string& doc_id) const {
  const std::uint32_t doc = doc_index(doc_id);
  double s = 0.0;
  for (const auto& term : query_terms) {
    const auto* plist = postings(term);
    if (!plist) continue;
    auto it = std::lower_bound(plist->begin(), plist->end(), doc,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    if (it == plist->end() || it->doc != doc) continue;
    s += term_weight(idf(term), it->tf, doc);
  }
  return s;
}

std::vector<RunEntry> Bm25Index::search(const std::vector<std::string>& query_terms, std::size_t depth) const {
  std::vector<double> acc(doc_ids_.size(), 0.0);
  for (const auto& term : query_terms) {
    const auto* plist = postings(term);
    if (!plist) continue;
    const double w = idf(term);
    for (const auto& p : *plist) {
      acc[p.doc] += term_weight(w, p.tf, p.doc);
    }
  }
  std::vector<RunEntry> entries;
  entries.reserve(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) entries.push_back({doc_ids_[i], acc[i]});
  const std::size_t keep = std::min(depth, entries.size());
  auto cmp = [](const RunEntry& a, const RunEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  };
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(), cmp);
  entries.resize(keep);
  return entries;
}

void Bm25Index::save(const std::string& path) const {
  nlohmann::json j;
  j["k1"] = params_.k1;
  j["b"] = params_.b;
  j["doc_ids"] = doc_ids_;
  j["doc_len"] = doc_len_;
  nlohmann::json post = nlohmann::json::object();
  for (const auto& [term, plist] : postings_) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : plist) arr.push_back({p.doc, p.tf});
    post[term] = std::move(arr);
  }
  j["postings"] = std::move(post);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write index " + path);
  out << j.dump() << '\n';
}

Bm25Index Bm25Index::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open index " + path);
  Bm25Index idx;
  try {
    const auto j = nlohmann::json::parse(in);
    idx.params_ = {j.at("k1").get<double>(), j.at("b").get<double>()};
    idx.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
    idx.doc_len_ = j.at("doc_len").get<std::vector<std::uint32_t>>();
    if (idx.doc_ids_.empty() || idx.doc_ids_.size() != idx.doc_len_.size()) {
      throw FormatError("index.doc_len", "doc id / length count mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < idx.doc_ids_.size(); ++i) {
      idx.doc_lookup_.emplace(idx.doc_ids_[i], static_cast<std::uint32_t>(i));
      total += idx.doc_len_[i];
    }
    idx.avg_len_ = total / static_cast<double>(idx.doc_ids_.size());
    for (const auto& [term, arr] : j.at("postings").items()) {
      auto& plist = idx.postings_[term];
      for (const auto& p : arr) {
        const auto doc = p.at(0).get<std::uint32_t>();
        if (doc >= idx.doc_ids_.size()) throw FormatError("index.postings." + term, "doc index out of range");
        plist.push_back({doc, p.at(1).get<std::uint32_t>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("index", e.what());
  }
  return idx;
}

MinedDevset mine_small_devset(const std::vector<Query>& queries, const Qrels& qrels,
                              const std::vector<Document>& corpus, const Bm25Index& index, std::size_t depth) {
  std::set<std::string> keep;
  for (const auto& q : queries) {
    for (const auto& e : index.search(split_tokens(q.text), depth)) keep.insert(e.doc_id);
    auto it = qrels.find(q.id);
    if (it == qrels.end()) continue;
    for (const auto& [doc, grade] : it->second) {
      if (grade > 0) keep.insert(doc);
    }
  }
  MinedDevset out;
  out.qrels = qrels;
  for (const auto& d : corpus) {
    if (keep.count(d.id)) out.corpus.push_back(d);
  }
  return out;
}

}  // namespace liforge
