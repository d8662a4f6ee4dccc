#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "agra/error.hpp"
#include "agra/sparse.hpp"
#include "agra/text_format.hpp"

namespace agra {

// Lowercases ASCII letters and splits on runs of ASCII non-alphanumerics.
// Bytes >= 0x80 are kept inside tokens so UTF-8 words survive intact.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (c >= 0x80 || std::isalnum(c)) {
      current += static_cast<char>(c >= 0x80 ? c : std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct Vocabulary {
  std::vector<std::string> terms;
  std::vector<double> idf;

  std::size_t size() const noexcept { return terms.size(); }

  // One "term<TAB>idf" line per column, in column order.
  std::string to_text() const {
    std::string out;
    for (std::size_t j = 0; j < terms.size(); ++j)
      out += terms[j] + "\t" + text::format_real(idf[j]) + "\n";
    return out;
  }

  static Vocabulary from_text(const std::string& content) {
    Vocabulary v;
    auto lines = text::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto tab = lines[i].find('\t');
      double idf = 0.0;
      if (tab == std::string_view::npos || tab == 0 ||
          !text::parse_real(lines[i].substr(tab + 1), idf))
        throw Error(ErrorCode::Parse, "vocabulary line " + std::to_string(i + 1), i + 1);
      v.terms.emplace_back(lines[i].substr(0, tab));
      v.idf.push_back(idf);
    }
    return v;
  }
};

struct TfidfResult {
  SparseMatrix features;
  Vocabulary vocabulary;
};

// Featurizes with a fixed vocabulary; unknown terms are dropped.
// weight(term, doc) = raw count · idf(term).
inline SparseMatrix tfidf_transform(const std::vector<std::string>& docs, const Vocabulary& vocab) {
  std::unordered_map<std::string, std::uint32_t> column;
  for (std::size_t j = 0; j < vocab.size(); ++j)
    column.emplace(vocab.terms[j], static_cast<std::uint32_t>(j));
  SparseMatrix m(vocab.size());
  std::vector<SparseEntry> row;
  for (const auto& doc : docs) {
    std::map<std::uint32_t, double> counts;
    for (const auto& tok : tokenize(doc))
      if (auto it = column.find(tok); it != column.end()) counts[it->second] += 1.0;
    row.clear();
    for (auto [col, tf] : counts) row.push_back({col, tf * vocab.idf[col]});
    m.add_row(row);
  }
  return m;
}

// Builds the vocabulary from `docs` and featurizes them. The vocabulary keeps
// the `vocab_cap` terms with the highest corpus count (ties broken
// lexicographically) and columns follow that ranking. idf = ln(N / df) + 1.
inline TfidfResult tfidf_featurize(const std::vector<std::string>& docs, std::size_t vocab_cap) {
  require(!docs.empty(), ErrorCode::EmptyInput, "empty corpus");
  require(vocab_cap >= 1, ErrorCode::InvalidArgument, "vocab_cap must be >= 1");

  struct TermStats {
    std::size_t count = 0;
    std::size_t df = 0;
  };
  std::map<std::string, TermStats> stats;
  for (const auto& doc : docs) {
    auto tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto& s = stats[tokens[i]];
      ++s.count;
      if (i == 0 || tokens[i] != tokens[i - 1]) ++s.df;
    }
  }
  require(!stats.empty(), ErrorCode::EmptyInput, "corpus contains no tokens");

  std::vector<std::pair<std::string, TermStats>> ranked(stats.begin(), stats.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.first < b.first;
  });
  if (ranked.size() > vocab_cap) ranked.resize(vocab_cap);

  Vocabulary vocab;
  const double n_docs = static_cast<double>(docs.size());
  for (const auto& [term, s] : ranked) {
    vocab.terms.push_back(term);
    vocab.idf.push_back(std::log(n_docs / static_cast<double>(s.df)) + 1.0);
  }
  return {tfidf_transform(docs, vocab), std::move(vocab)};
}

}  // namespace agra
