#pragma once

// Edit distance and BLEU used for augmentation diversity. Both operate on
// Unicode scalar values so multibyte mathematical symbols count as single
// units.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "forge/util.hpp"

namespace forge {

// Minimal insert/delete/substitute count, two-row dynamic program.
inline long levenshtein(std::string_view a, std::string_view b) {
  std::vector<uint32_t> ca = utf8::decode(a);
  std::vector<uint32_t> cb = utf8::decode(b);
  if (ca.size() < cb.size()) std::swap(ca, cb);  // cb is the shorter row
  size_t n = cb.size();
  std::vector<long> prev(n + 1);
  std::vector<long> cur(n + 1);
  for (size_t j = 0; j <= n; ++j) prev[j] = static_cast<long>(j);
  for (size_t i = 1; i <= ca.size(); ++i) {
    cur[0] = static_cast<long>(i);
    for (size_t j = 1; j <= n; ++j) {
      long subst = prev[j - 1] + (ca[i - 1] == cb[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

// Whitespace splitting with each ASCII punctuation character as its own
// token; multibyte symbols stay glued to their neighbors unless whitespace
// separates them. Pinned here because the diversity numbers depend on it.
inline std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x80 && (c == ' ' || c == '\t' || c == '\n' || c == '\r')) {
      flush();
    } else if (u < 0x80 && std::ispunct(u)) {
      flush();
      tokens.push_back(std::string(1, c));
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return tokens;
}

// BLEU with n-grams up to 4, brevity penalty, and add-one smoothing on the
// higher-order precisions only. Conventions: two empty texts score 1.0; an
// empty side or zero unigram overlap scores 0.0.
inline double bleu(std::string_view candidate, std::string_view reference) {
  auto cand = bleu_tokenize(candidate);
  auto ref = bleu_tokenize(reference);
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;

  double log_sum = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, long> ref_counts;
    for (size_t i = 0; n <= ref.size() && i + n <= ref.size(); ++i) {
      ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)]++;
    }
    long matched = 0;
    long total = 0;
    std::map<std::vector<std::string>, long> used;
    for (size_t i = 0; n <= cand.size() && i + n <= cand.size(); ++i) {
      std::vector<std::string> gram(cand.begin() + i, cand.begin() + i + n);
      ++total;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end() && used[gram] < it->second) {
        ++used[gram];
        ++matched;
      }
    }
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      p = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    log_sum += 0.25 * std::log(p);
  }

  double bp = 1.0;
  if (cand.size() < ref.size()) {
    bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
  }
  return bp * std::exp(log_sum);
}

}  // namespace forge
