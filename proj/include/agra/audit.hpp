#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "agra/error.hpp"
#include "agra/text_format.hpp"

namespace agra {

// Per-batch counts of filtering outcome against gold correctness. Every
// processed sample lands in exactly one field (multi-label runs count
// (sample, class) entries instead of samples).
struct AuditRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::size_t correct_kept = 0;
  std::size_t correct_removed = 0;
  std::size_t mislabeled_kept = 0;
  std::size_t mislabeled_removed = 0;
  std::size_t relabeled_to_gold = 0;
  std::size_t relabeled_away = 0;

  std::size_t total() const noexcept {
    return correct_kept + correct_removed + mislabeled_kept + mislabeled_removed + relabeled_to_gold +
           relabeled_away;
  }
  std::size_t mislabeled() const noexcept { return mislabeled_kept + mislabeled_removed; }

  friend bool operator==(const AuditRecord&, const AuditRecord&) = default;
};

inline constexpr const char* kAuditHeader =
    "epoch,batch,correct_kept,correct_removed,mislabeled_kept,mislabeled_removed,relabeled_to_gold,"
    "relabeled_away";

inline std::string format_audit_csv(const std::vector<AuditRecord>& records) {
  std::string out = std::string(kAuditHeader) + "\n";
  for (const auto& r : records) {
    for (std::size_t v : {r.epoch, r.batch, r.correct_kept, r.correct_removed, r.mislabeled_kept,
                          r.mislabeled_removed, r.relabeled_to_gold}) {
      out += std::to_string(v);
      out += ',';
    }
    out += std::to_string(r.relabeled_away);
    out += '\n';
  }
  return out;
}

inline std::vector<AuditRecord> parse_audit_csv(const std::string& content) {
  auto lines = text::split_lines(content);
  if (lines.empty() || lines[0] != kAuditHeader)
    throw Error(ErrorCode::Parse, "audit.csv: unexpected header", 1);
  std::vector<AuditRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::size_t> fields;
    std::size_t start = 0;
    const auto line = lines[i];
    while (true) {
      auto comma = line.find(',', start);
      auto token = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      std::size_t v = 0;
      if (!text::parse_int(token, v))
        throw Error(ErrorCode::Parse, "audit.csv: line " + std::to_string(i + 1) + ": bad field", i + 1);
      fields.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 8)
      throw Error(ErrorCode::Parse, "audit.csv: line " + std::to_string(i + 1) + ": expected 8 fields", i + 1);
    records.push_back({fields[0], fields[1], fields[2], fields[3], fields[4], fields[5], fields[6], fields[7]});
  }
  return records;
}

// Per-epoch fractions. The four kept/removed fractions are taken over
// samples that were not relabeled and sum to 1; relabel fractions are over
// all processed samples.
struct AuditSummaryRow {
  std::size_t epoch = 0;
  double correct_kept = 0;
  double mislabeled_removed = 0;
  double mislabeled_kept = 0;
  double correct_removed = 0;
  double relabeled_to_gold = 0;
  double relabeled_away = 0;
  std::size_t n_processed = 0;
};

inline std::vector<AuditSummaryRow> audit_summary(const std::vector<AuditRecord>& log) {
  require(!log.empty(), ErrorCode::EmptyInput, "empty audit log");
  std::map<std::size_t, AuditRecord> per_epoch;
  for (const auto& r : log) {
    auto& acc = per_epoch[r.epoch];
    acc.epoch = r.epoch;
    acc.correct_kept += r.correct_kept;
    acc.correct_removed += r.correct_removed;
    acc.mislabeled_kept += r.mislabeled_kept;
    acc.mislabeled_removed += r.mislabeled_removed;
    acc.relabeled_to_gold += r.relabeled_to_gold;
    acc.relabeled_away += r.relabeled_away;
  }
  std::vector<AuditSummaryRow> rows;
  for (const auto& [epoch, acc] : per_epoch) {
    AuditSummaryRow row;
    row.epoch = epoch;
    row.n_processed = acc.total();
    const double partition =
        static_cast<double>(acc.correct_kept + acc.correct_removed + acc.mislabeled_kept + acc.mislabeled_removed);
    if (partition > 0) {
      row.correct_kept = static_cast<double>(acc.correct_kept) / partition;
      row.mislabeled_removed = static_cast<double>(acc.mislabeled_removed) / partition;
      row.mislabeled_kept = static_cast<double>(acc.mislabeled_kept) / partition;
      row.correct_removed = static_cast<double>(acc.correct_removed) / partition;
    }
    if (row.n_processed > 0) {
      row.relabeled_to_gold = static_cast<double>(acc.relabeled_to_gold) / static_cast<double>(row.n_processed);
      row.relabeled_away = static_cast<double>(acc.relabeled_away) / static_cast<double>(row.n_processed);
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string format_audit_summary_csv(const std::vector<AuditSummaryRow>& rows) {
  std::string out =
      "epoch,correct_kept,mislabeled_removed,mislabeled_kept,correct_removed,relabeled_to_gold,relabeled_away,"
      "n_processed\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch);
    for (double v : {r.correct_kept, r.mislabeled_removed, r.mislabeled_kept, r.correct_removed,
                     r.relabeled_to_gold, r.relabeled_away})
      out += "," + text::format_real(v);
    out += "," + std::to_string(r.n_processed) + "\n";
  }
  return out;
}

}  // namespace agra
