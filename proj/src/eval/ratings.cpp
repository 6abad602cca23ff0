#include "eval/ratings.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/plan.hpp"

namespace iiie::eval {

namespace {

constexpr std::array<std::string_view, 3> kMetricNames{"EditFaithfulness", "ContentPreservation",
                                                       "OverallInstructionFollowing"};
constexpr std::array<std::string_view, 3> kDisplayNames{"Edit Faithfulness", "Content Preservation",
                                                        "Overall Instruction Following"};
constexpr std::string_view kRatingsHeader = "method,image_id,metric,rater_id,score";
constexpr std::string_view kScoresHeader =
    "method,rank,images,EditFaithfulness,ContentPreservation,OverallInstructionFollowing,"
    "EditFaithfulness_votes,ContentPreservation_votes,OverallInstructionFollowing_votes";

[[noreturn]] void bad_row(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::PreconditionViolation, "ratings line " + std::to_string(line) + ": " + why);
}

std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) bad_row(line_no, "unterminated quote");
  for (auto& f : out) f = trim(f);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

int parse_score(std::string_view s, std::size_t line) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  bad_row(line, "score must be 0 or 1, got '" + std::string(s) + "'");
}

RatingRecord make_record(std::string method, std::string image, std::string_view metric, std::string rater,
                         int score, std::size_t line) {
  const auto m = metric_from_string(metric);
  if (!m) bad_row(line, "unknown metric '" + std::string(metric) + "'");
  if (method.empty() || image.empty() || rater.empty()) bad_row(line, "empty method, image_id or rater_id");
  return {std::move(method), std::move(image), *m, std::move(rater), score};
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::int64_t parse_int(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    bad_row(line, "expected an integer, got '" + s + "'");
  }
}

}  // namespace

std::string_view to_string(Metric metric) { return kMetricNames[static_cast<std::size_t>(metric)]; }
std::string_view display_name(Metric metric) { return kDisplayNames[static_cast<std::size_t>(metric)]; }

std::optional<Metric> metric_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
    if (name == kMetricNames[i] || name == kDisplayNames[i]) return static_cast<Metric>(i);
  }
  return std::nullopt;
}

std::vector<RatingRecord> parse_ratings_csv(std::string_view text) {
  const auto lines = lines_of(text);
  std::vector<RatingRecord> out;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto fields = split_csv(lines[i], i + 1);
    if (!header_seen) {
      std::string joined;
      for (std::size_t k = 0; k < fields.size(); ++k) joined += (k ? "," : "") + to_lower(fields[k]);
      if (joined != kRatingsHeader) bad_row(i + 1, "expected header '" + std::string(kRatingsHeader) + "'");
      header_seen = true;
      continue;
    }
    if (fields.size() != 5) bad_row(i + 1, "expected 5 fields, got " + std::to_string(fields.size()));
    out.push_back(make_record(fields[0], fields[1], fields[2], fields[3], parse_score(fields[4], i + 1), i + 1));
  }
  if (!header_seen) throw Error(ErrorCode::PreconditionViolation, "ratings CSV has no header");
  return out;
}

std::vector<RatingRecord> parse_ratings_jsonl(std::string_view text) {
  const auto lines = lines_of(text);
  std::vector<RatingRecord> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      bad_row(i + 1, e.what());
    }
    const auto str = [&](const char* key) -> std::string {
      if (!j.is_object() || !j.contains(key)) bad_row(i + 1, std::string("missing '") + key + "'");
      const auto& v = j.at(key);
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      bad_row(i + 1, std::string("'") + key + "' must be a string");
    };
    out.push_back(make_record(str("method"), str("image_id"), str("metric"), str("rater_id"),
                              parse_score(str("score"), i + 1), i + 1));
  }
  return out;
}

std::vector<RatingRecord> parse_ratings(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_ratings_jsonl(text);
  return parse_ratings_csv(text);
}

std::string ratings_to_csv(std::span<const RatingRecord> records) {
  std::string out = std::string(kRatingsHeader) + "\n";
  for (const auto& r : records) {
    out += csv_field(r.method) + "," + csv_field(r.image_id) + "," + std::string(to_string(r.metric)) + "," +
           csv_field(r.rater_id) + "," + std::to_string(r.score) + "\n";
  }
  return out;
}

int majority_vote(std::span<const int> scores) {
  if (scores.size() % 2 == 0) {
    throw Error(ErrorCode::EvenPanel, "majority vote needs an odd panel, got " + std::to_string(scores.size()));
  }
  std::size_t ones = 0;
  for (const int s : scores) {
    if (s != 0 && s != 1) throw Error(ErrorCode::PreconditionViolation, "score outside {0, 1}");
    ones += static_cast<std::size_t>(s);
  }
  return ones * 2 > scores.size() ? 1 : 0;
}

std::string Fraction::display() const {
  if (den <= 0 || num < 0) throw Error(ErrorCode::PreconditionViolation, "fraction must be non-negative over a positive denominator");
  const std::int64_t hundredths = (200 * num + den) / (2 * den);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(hundredths / 100),
                static_cast<long long>(hundredths % 100));
  return buf;
}

std::vector<MethodScore> aggregate(std::span<const RatingRecord> records) {
  using Cell = std::tuple<std::string, std::string, Metric>;
  std::map<Cell, std::vector<int>> cells;
  std::map<Cell, std::set<std::string>> raters;
  for (const auto& r : records) {
    const Cell cell{r.method, r.image_id, r.metric};
    if (!raters[cell].insert(r.rater_id).second) {
      throw Error(ErrorCode::DuplicateRating, "rater " + r.rater_id + " scored " + r.method + "/" + r.image_id + "/" +
                                                  std::string(to_string(r.metric)) + " twice");
    }
    cells[cell].push_back(r.score);
  }

  std::size_t panel = 0;
  for (const auto& [cell, scores] : cells) panel = std::max(panel, scores.size());
  for (const auto& [cell, scores] : cells) {
    if (scores.size() != panel) {
      throw Error(ErrorCode::IncompletePanel, std::get<0>(cell) + "/" + std::get<1>(cell) + "/" +
                                                  std::string(to_string(std::get<2>(cell))) + " has " +
                                                  std::to_string(scores.size()) + " of " + std::to_string(panel) +
                                                  " ratings");
    }
  }

  std::map<std::string, std::map<std::string, std::map<Metric, int>>> votes;  // method -> image -> metric
  for (const auto& [cell, scores] : cells) {
    votes[std::get<0>(cell)][std::get<1>(cell)][std::get<2>(cell)] = majority_vote(scores);
  }

  std::vector<MethodScore> out;
  for (const auto& [method, images] : votes) {
    MethodScore score;
    score.method = method;
    score.images = static_cast<std::int64_t>(images.size());
    std::map<Metric, std::int64_t> positive;
    for (const auto& [image, metrics] : images) {
      for (const Metric m : kAllMetrics) {
        const auto it = metrics.find(m);
        if (it == metrics.end()) {
          throw Error(ErrorCode::IncompletePanel,
                      method + "/" + image + " has no ratings for " + std::string(to_string(m)));
        }
        positive[m] += it->second;
      }
    }
    for (const Metric m : kAllMetrics) score.means[m] = Fraction{positive[m], score.images};
    out.push_back(std::move(score));
  }
  return out;
}

std::vector<RankedRow> rank_methods(std::vector<MethodScore> scores) {
  const auto mean = [](const MethodScore& s, Metric m) {
    const auto it = s.means.find(m);
    return it == s.means.end() ? Fraction{0, 1} : it->second;
  };
  std::sort(scores.begin(), scores.end(), [&](const MethodScore& a, const MethodScore& b) {
    const Fraction ao = mean(a, Metric::OverallInstructionFollowing), bo = mean(b, Metric::OverallInstructionFollowing);
    if (!(ao == bo)) return bo < ao;
    const Fraction ae = mean(a, Metric::EditFaithfulness), be = mean(b, Metric::EditFaithfulness);
    if (!(ae == be)) return be < ae;
    return a.method < b.method;
  });
  std::vector<RankedRow> rows;
  for (std::size_t i = 0; i < scores.size(); ++i) rows.push_back({static_cast<int>(i + 1), std::move(scores[i])});
  return rows;
}

std::string render_table(std::span<const RankedRow> rows) {
  std::size_t name_w = std::string_view("Method").size();
  for (const auto& r : rows) name_w = std::max(name_w, r.score.method.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_w)) << "Method" << "  Rank";
  for (const Metric m : kAllMetrics) out << "  " << display_name(m);
  out << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(name_w)) << r.score.method << "  " << std::right << std::setw(4)
        << r.rank;
    for (const Metric m : kAllMetrics) {
      const auto it = r.score.means.find(m);
      out << "  " << std::right << std::setw(static_cast<int>(display_name(m).size()))
          << (it == r.score.means.end() ? std::string("-") : it->second.display());
    }
    out << "\n";
  }
  return out.str();
}

std::string render_csv(std::span<const RankedRow> rows) {
  std::string out = std::string(kScoresHeader) + "\n";
  for (const auto& r : rows) {
    out += csv_field(r.score.method) + "," + std::to_string(r.rank) + "," + std::to_string(r.score.images);
    for (const Metric m : kAllMetrics) out += "," + r.score.means.at(m).display();
    for (const Metric m : kAllMetrics) out += "," + std::to_string(r.score.means.at(m).num);
    out += "\n";
  }
  return out;
}

std::vector<MethodScore> parse_scores_csv(std::string_view text) {
  const auto lines = lines_of(text);
  std::vector<MethodScore> out;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    if (!header_seen) {
      if (trim(lines[i]) != kScoresHeader) bad_row(i + 1, "expected the aggregate header");
      header_seen = true;
      continue;
    }
    const auto f = split_csv(lines[i], i + 1);
    if (f.size() != 9) bad_row(i + 1, "expected 9 fields");
    MethodScore s;
    s.method = f[0];
    s.images = parse_int(f[2], i + 1);
    if (s.images <= 0) bad_row(i + 1, "image count must be positive");
    for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
      const std::int64_t votes = parse_int(f[6 + k], i + 1);
      if (votes < 0 || votes > s.images) bad_row(i + 1, "vote count outside [0, images]");
      s.means[kAllMetrics[k]] = Fraction{votes, s.images};
    }
    out.push_back(std::move(s));
  }
  if (!header_seen) throw Error(ErrorCode::PreconditionViolation, "aggregate CSV has no header");
  return out;
}

}  // namespace iiie::eval
