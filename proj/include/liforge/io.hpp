// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "liforge/types.hpp"

namespace liforge {

// Corpus: JSON-lines {"id": str, "text": str}.
std::vector<Document> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<Document>& docs);

// Queries: id<TAB>text per line.
std::vector<Query> read_queries(const std::string& path);
void write_queries(const std::string& path, const std::vector<Query>& queries);

// Qrels: "qid 0 docid grade", whitespace separated.
Qrels read_qrels(const std::string& path);
void write_qrels(const std::string& path, const Qrels& qrels);

// Runs: "qid Q0 docid rank score tag". Reading re-sorts each query's entries
// by (score desc, doc_id asc); the rank column is informational.
RunList read_run(const std::string& path);
void write_run(const std::string& path, const RunList& run, const std::string& tag);

// Triplets: JSON-lines, one TripletRecord per line:
// {"query_id", "query_text", "docs": [{"doc_id", "text", "teacher_scores": {name: score}}]}
std::vector<TripletRecord> read_triplets(const std::string& path);
void write_triplets(const std::string& path, const std::vector<TripletRecord>& records);
std::string triplet_to_json_line(const TripletRecord& record);
TripletRecord triplet_from_json_line(const std::string& line);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace liforge
