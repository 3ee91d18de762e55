// SPDX-License-Identifier: Apache-2.0
#include "liforge/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "liforge/error.hpp"

namespace liforge {
namespace {

std::ifstream open_in(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(std::string("cannot open ") + what + " file " + path);
  return in;
}

std::ofstream open_out(const std::string& path, const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(std::string("cannot write ") + what + " file " + path);
  return out;
}

std::string where(const std::string& path, std::size_t lineno) {
  return path + ":" + std::to_string(lineno);
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string f;
  while (ss >> f) out.push_back(f);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<Document> read_corpus(const std::string& path) {
  auto in = open_in(path, "corpus");
  std::vector<Document> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Document d{j.at("id").get<std::string>(), j.at("text").get<std::string>()};
      if (!seen.insert(d.id).second) throw DataError(where(path, lineno) + ": duplicate doc id " + d.id);
      docs.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where(path, lineno), e.what());
    }
  }
  return docs;
}

void write_corpus(const std::string& path, const std::vector<Document>& docs) {
  auto out = open_out(path, "corpus");
  for (const auto& d : docs) out << nlohmann::json{{"id", d.id}, {"text", d.text}}.dump() << '\n';
}

std::vector<Query> read_queries(const std::string& path) {
  auto in = open_in(path, "queries");
  std::vector<Query> queries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(where(path, lineno), "expected id<TAB>text");
    }
    queries.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return queries;
}

void write_queries(const std::string& path, const std::vector<Query>& queries) {
  auto out = open_out(path, "queries");
  for (const auto& q : queries) out << q.id << '\t' << q.text << '\n';
}

Qrels read_qrels(const std::string& path) {
  auto in = open_in(path, "qrels");
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto f = fields_of(line);
    if (f.size() != 4) throw FormatError(where(path, lineno), "expected 'qid 0 docid grade'");
    int grade = 0;
    auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), grade);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size()) {
      throw FormatError(where(path, lineno), "grade is not an integer: " + f[3]);
    }
    if (grade < 0) throw DataError(where(path, lineno) + ": negative grade");
    qrels[f[0]][f[2]] = grade;
  }
  if (qrels.empty()) throw DataError("qrels file " + path + " has no judgments");
  return qrels;
}

void write_qrels(const std::string& path, const Qrels& qrels) {
  auto out = open_out(path, "qrels");
  for (const auto& [qid, docs] : qrels) {
    for (const auto& [doc, grade] : docs) out << qid << " 0 " << doc << ' ' << grade << '\n';
  }
}

RunList read_run(const std::string& path) {
  auto in = open_in(path, "run");
  RunList run;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto f = fields_of(line);
    if (f.size() != 6) throw FormatError(where(path, lineno), "expected 'qid Q0 docid rank score tag'");
    double score = 0.0;
    auto [ptr, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), score);
    if (ec != std::errc() || ptr != f[4].data() + f[4].size()) {
      throw FormatError(where(path, lineno), "score is not a number: " + f[4]);
    }
    if (!seen[f[0]].insert(f[2]).second) {
      throw DataError(where(path, lineno) + ": duplicate doc " + f[2] + " for query " + f[0]);
    }
    run[f[0]].push_back({f[2], score});
  }
  for (auto& [qid, entries] : run) sort_run_entries(entries);
  return run;
}

void write_run(const std::string& path, const RunList& run, const std::string& tag) {
  auto out = open_out(path, "run");
  for (const auto& [qid, entries] : run) {
    std::size_t rank = 1;
    for (const auto& e : entries) {
      out << qid << " Q0 " << e.doc_id << ' ' << rank++ << ' ' << format_double(e.score) << ' ' << tag << '\n';
    }
  }
}

std::string triplet_to_json_line(const TripletRecord& r) {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : r.docs) {
    docs.push_back({{"doc_id", d.doc_id}, {"text", d.text}, {"teacher_scores", d.teacher_scores}});
  }
  return nlohmann::json{{"query_id", r.query_id}, {"query_text", r.query_text}, {"docs", docs}}.dump();
}

TripletRecord triplet_from_json_line(const std::string& line) {
  auto j = nlohmann::json::parse(line);
  TripletRecord r;
  r.query_id = j.at("query_id").get<std::string>();
  r.query_text = j.at("query_text").get<std::string>();
  for (const auto& d : j.at("docs")) {
    r.docs.push_back({d.at("doc_id").get<std::string>(), d.at("text").get<std::string>(),
                      d.at("teacher_scores").get<std::map<std::string, double>>()});
  }
  return r;
}

std::vector<TripletRecord> read_triplets(const std::string& path) {
  auto in = open_in(path, "triplets");
  std::vector<TripletRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      records.push_back(triplet_from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where(path, lineno), e.what());
    }
    if (records.back().docs.size() < 2) {
      throw DataError(where(path, lineno) + ": triplet needs at least 2 docs");
    }
  }
  return records;
}

void write_triplets(const std::string& path, const std::vector<TripletRecord>& records) {
  auto out = open_out(path, "triplets");
  for (const auto& r : records) out << triplet_to_json_line(r) << '\n';
}

}  // namespace liforge
