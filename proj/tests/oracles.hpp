// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used to check the library. Kept
// deliberately naive: plain loops, no shared code with src/.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline double maxsim(const Rows& q, const Rows& d) {
  double total = 0.0;
  for (const auto& qr : q) {
    double best = -1e300;
    for (const auto& dr : d) {
      double s = 0.0;
      for (std::size_t k = 0; k < qr.size(); ++k) s += qr[k] * dr[k];
      best = std::max(best, s);
    }
    total += best;
  }
  return total;
}

/// Full sort of (doc, score) by score desc then doc asc, cut at k.
inline std::vector<std::pair<std::string, double>> full_sort(std::vector<std::pair<std::string, double>> scored,
                                                             std::size_t k) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

// Brute-force ranking metrics over a ranked doc list and a grade map.
inline int grade(const std::map<std::string, int>& g, const std::string& d) {
  auto it = g.find(d);
  return it == g.end() ? 0 : it->second;
}

inline double ndcg(const std::vector<std::string>& ranked, const std::map<std::string, int>& g, int k, bool exp_gain) {
  auto gain = [&](int r) { return exp_gain ? std::pow(2.0, r) - 1.0 : static_cast<double>(r); };
  double dcg = 0.0;
  for (int i = 1; i <= k && i <= static_cast<int>(ranked.size()); ++i) dcg += gain(grade(g, ranked[i - 1])) / std::log2(i + 1.0);
  // ideal: try every judged doc greedily by grade (selection sort)
  std::vector<int> grades;
  for (const auto& [d, r] : g) grades.push_back(r);
  double idcg = 0.0;
  for (int i = 1; i <= k && !grades.empty(); ++i) {
    auto it = std::max_element(grades.begin(), grades.end());
    if (*it <= 0) break;
    idcg += gain(*it) / std::log2(i + 1.0);
    grades.erase(it);
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

inline int n_relevant(const std::map<std::string, int>& g) {
  int n = 0;
  for (const auto& [d, r] : g) n += r > 0;
  return n;
}

inline double mrr(const std::vector<std::string>& ranked, const std::map<std::string, int>& g, int k) {
  for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
    if (grade(g, ranked[i]) > 0) return 1.0 / (i + 1);
  }
  return 0.0;
}

inline double recall(const std::vector<std::string>& ranked, const std::map<std::string, int>& g, int k) {
  int hit = 0;
  for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) hit += grade(g, ranked[i]) > 0;
  const int rel = n_relevant(g);
  return rel == 0 ? 0.0 : static_cast<double>(hit) / rel;
}

inline double map_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& g, int k) {
  const int rel = n_relevant(g);
  if (rel == 0) return 0.0;
  double sum = 0.0;
  for (int i = 1; i <= k && i <= static_cast<int>(ranked.size()); ++i) {
    if (grade(g, ranked[i - 1]) <= 0) continue;
    int hits = 0;
    for (int j = 1; j <= i; ++j) hits += grade(g, ranked[j - 1]) > 0;
    sum += static_cast<double>(hits) / i;
  }
  return sum / std::min(rel, k);
}

inline double hit_rate(const std::vector<std::string>& ranked, const std::map<std::string, int>& g, int k) {
  return mrr(ranked, g, k) > 0.0 ? 1.0 : 0.0;
}

/// Central finite differences of f at x.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double eps = 1e-4) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double up = f(x);
    x[i] = orig - eps;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

}  // namespace oracle
