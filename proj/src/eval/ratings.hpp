#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iiie::eval {

enum class Metric { EditFaithfulness, ContentPreservation, OverallInstructionFollowing };

inline constexpr std::array<Metric, 3> kAllMetrics{Metric::EditFaithfulness, Metric::ContentPreservation,
                                                   Metric::OverallInstructionFollowing};

std::string_view to_string(Metric metric);
// Also accepts the spaced display names ("Edit Faithfulness").
std::optional<Metric> metric_from_string(std::string_view name);
std::string_view display_name(Metric metric);

struct RatingRecord {
  std::string method;
  std::string image_id;
  Metric metric = Metric::EditFaithfulness;
  std::string rater_id;
  int score = 0;  // 0 or 1
};

// Header line: method,image_id,metric,rater_id,score. Fields may be double
// quoted. Throws PreconditionViolation on malformed rows or scores outside
// {0, 1}.
std::vector<RatingRecord> parse_ratings_csv(std::string_view text);
// One {"method", "image_id", "metric", "rater_id", "score"} object per line.
std::vector<RatingRecord> parse_ratings_jsonl(std::string_view text);
// JSONL when the first non-blank character is '{', CSV otherwise.
std::vector<RatingRecord> parse_ratings(std::string_view text);
std::string ratings_to_csv(std::span<const RatingRecord> records);

// 1 iff more than half the scores are 1. Throws EvenPanel for an even count
// (including zero) and PreconditionViolation for a score outside {0, 1}.
int majority_vote(std::span<const int> scores);

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  // Two decimals, half-up: floor(100 * num / den + 1/2) hundredths.
  std::string display() const;
  friend bool operator==(const Fraction& a, const Fraction& b) { return a.num * b.den == b.num * a.den; }
  friend bool operator<(const Fraction& a, const Fraction& b) { return a.num * b.den < b.num * a.den; }
};

struct MethodScore {
  std::string method;
  std::int64_t images = 0;
  std::map<Metric, Fraction> means;  // positive majority votes / images
};

// Per-method means of per-cell majority votes, methods in name order.
// Throws DuplicateRating when a rater scores a cell twice, IncompletePanel
// when an image lacks a metric or a cell has fewer raters than the largest
// panel, and EvenPanel when the panel size is even.
std::vector<MethodScore> aggregate(std::span<const RatingRecord> records);

struct RankedRow {
  int rank = 0;
  MethodScore score;
};

// Overall Instruction Following descending, then Edit Faithfulness
// descending, then method name ascending. Comparisons are exact.
std::vector<RankedRow> rank_methods(std::vector<MethodScore> scores);

// Fixed-width text table: Method, Rank, the three metrics.
std::string render_table(std::span<const RankedRow> rows);
// method,rank,images,EditFaithfulness,ContentPreservation,OverallInstructionFollowing
// with each metric as the display value; exact counts follow as
// <metric>_votes columns.
std::string render_csv(std::span<const RankedRow> rows);
// Reads render_csv output back (exact fractions from the vote columns).
std::vector<MethodScore> parse_scores_csv(std::string_view text);

}  // namespace iiie::eval
