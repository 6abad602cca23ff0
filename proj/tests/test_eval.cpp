#include <doctest.h>

#include <algorithm>
#include <random>

#include "eval/ratings.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace iiie;
using namespace iiie::eval;
using testing::code_of;

namespace {

// Reported values: method -> (EF, CP, OIF) and rank.
struct Reported {
  std::string method;
  int rank;
  std::array<std::string, 3> values;
};
const std::vector<Reported> kReported{
    {"IIIE", 1, {"0.51", "0.78", "0.80"}},
    {"LEdits++", 2, {"0.46", "0.64", "0.74"}},
    {"Tasvir", 3, {"0.40", "0.49", "0.62"}},
};

std::vector<RatingRecord> table_corpus() {
  return parse_ratings(testing::slurp(testing::fixture("ratings/table1.csv")));
}

// Complete 3-rater panels over random methods/images; `density` biases scores.
std::vector<RatingRecord> synthetic(std::mt19937& rng, int methods, int images, double density) {
  std::bernoulli_distribution bit(density);
  std::vector<RatingRecord> out;
  for (int m = 0; m < methods; ++m)
    for (int i = 0; i < images; ++i)
      for (const Metric metric : kAllMetrics)
        for (int r = 0; r < 3; ++r)
          out.push_back({"m" + std::to_string(m), "img" + std::to_string(i), metric, "r" + std::to_string(r),
                         bit(rng) ? 1 : 0});
  return out;
}

std::vector<oracle::Rating> to_oracle(const std::vector<RatingRecord>& records) {
  std::vector<oracle::Rating> out;
  for (const auto& r : records) out.push_back({r.method, r.image_id, std::string(to_string(r.metric)), r.rater_id, r.score});
  return out;
}

void check_against_oracle(const std::vector<RatingRecord>& records) {
  const auto expected = oracle::brute_force(to_oracle(records));
  const auto got = aggregate(records);
  std::size_t cells = 0;
  for (const auto& s : got) {
    for (const Metric metric : kAllMetrics) {
      const auto& [pos, n] = expected.at({s.method, std::string(to_string(metric))});
      CHECK(s.means.at(metric).num == pos);
      CHECK(s.means.at(metric).den == n);
      CHECK(s.images == n);
      CHECK(s.means.at(metric).display() == oracle::display(pos, n));
      ++cells;
    }
  }
  CHECK(cells == expected.size());
}

std::map<std::string, std::map<Metric, Fraction>> by_method(const std::vector<MethodScore>& scores) {
  std::map<std::string, std::map<Metric, Fraction>> out;
  for (const auto& s : scores) out[s.method] = s.means;
  return out;
}

}  // namespace

TEST_CASE("majority vote: exhaustive three-rater truth table") {
  for (int bits = 0; bits < 8; ++bits) {
    const std::vector<int> panel{bits & 1, (bits >> 1) & 1, (bits >> 2) & 1};
    const int ones = panel[0] + panel[1] + panel[2];
    CAPTURE(bits);
    CHECK(majority_vote(panel) == (ones > 1.5 ? 1 : 0));
  }
  CHECK(majority_vote(std::vector<int>{1, 1, 0}) == 1);
  CHECK(majority_vote(std::vector<int>{0, 0, 1}) == 0);
  CHECK(majority_vote(std::vector<int>{1}) == 1);
  CHECK(majority_vote(std::vector<int>{1, 1, 0, 0, 1}) == 1);
  CHECK(code_of([] { majority_vote(std::vector<int>{1, 0}); }) == ErrorCode::EvenPanel);
  CHECK(code_of([] { majority_vote(std::vector<int>{}); }) == ErrorCode::EvenPanel);
  CHECK(code_of([] { majority_vote(std::vector<int>{1, 2, 0}); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("half-up display against long division") {
  for (std::int64_t den = 1; den <= 240; ++den)
    for (std::int64_t num = 0; num <= den; ++num) REQUIRE(Fraction{num, den}.display() == oracle::display(num, den));
  CHECK(Fraction{1, 200}.display() == "0.01");
  CHECK(Fraction{1, 201}.display() == "0.00");
  CHECK(Fraction{612, 1200}.display() == "0.51");
  CHECK(Fraction{1, 1}.display() == "1.00");
}

TEST_CASE("aggregation of a 1.2k-row synthetic corpus matches the brute-force oracle") {
  std::mt19937 rng(99);
  const auto records = synthetic(rng, 4, 100, 0.55);  // 4 * 100 * 3 * 3 = 3600 rows
  REQUIRE(records.size() >= 1200);
  check_against_oracle(records);
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937 r(seed);
    check_against_oracle(synthetic(r, 1 + seed % 3, 1 + seed * 7, 0.1 + 0.04 * seed));
  }
}

TEST_CASE("all-ones panels give 1.00") {
  std::vector<RatingRecord> records;
  for (int i = 0; i < 10; ++i)
    for (const Metric m : kAllMetrics)
      for (int r = 0; r < 3; ++r) records.push_back({"A", "i" + std::to_string(i), m, "r" + std::to_string(r), 1});
  const auto s = aggregate(records);
  REQUIRE(s.size() == 1);
  CHECK(s[0].images == 10);
  for (const Metric m : kAllMetrics) CHECK(s[0].means.at(m).display() == "1.00");
}

TEST_CASE("rating corpus reproduces the reported three-method table") {
  const auto records = table_corpus();
  REQUIRE(records.size() == 3u * 1200u * 3u * 3u);
  check_against_oracle(records);
  const auto ranked = rank_methods(aggregate(records));
  REQUIRE(ranked.size() == kReported.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    CAPTURE(kReported[i].method);
    CHECK(ranked[i].score.method == kReported[i].method);
    CHECK(ranked[i].rank == kReported[i].rank);
    CHECK(ranked[i].score.images == 1200);
    for (std::size_t k = 0; k < 3; ++k) CHECK(ranked[i].score.means.at(kAllMetrics[k]).display() == kReported[i].values[k]);
  }
  const std::string table = render_table(ranked);
  CHECK(table.find("IIIE") < table.find("LEdits++"));
  CHECK(table.find("LEdits++") < table.find("Tasvir"));
  CHECK(table.find("0.80") != std::string::npos);
  CHECK(table.find("Overall Instruction Following") != std::string::npos);
}

TEST_CASE("ranking ties") {
  const auto score = [](std::string name, std::int64_t ef, std::int64_t oif) {
    return MethodScore{std::move(name), 10,
                       {{Metric::EditFaithfulness, {ef, 10}},
                        {Metric::ContentPreservation, {5, 10}},
                        {Metric::OverallInstructionFollowing, {oif, 10}}}};
  };
  const auto single = rank_methods({score("solo", 1, 1)});
  REQUIRE(single.size() == 1);
  CHECK(single[0].rank == 1);

  const auto ranked = rank_methods({score("b", 5, 7), score("a", 5, 7), score("c", 6, 7), score("d", 9, 8)});
  std::vector<std::string> order;
  for (const auto& r : ranked) order.push_back(r.score.method);
  CHECK(order == std::vector<std::string>{"d", "c", "a", "b"});
  CHECK(ranked[3].rank == 4);

  // Equal rationals with different denominators compare equal.
  MethodScore x = score("x", 5, 7);
  x.means[Metric::OverallInstructionFollowing] = {14, 20};
  x.means[Metric::EditFaithfulness] = {1, 2};
  const auto mixed = rank_methods({score("y", 5, 7), x});
  CHECK(mixed[0].score.method == "x");
}

TEST_CASE("aggregation invariants: permutation, rater relabelling, monotonicity") {
  std::mt19937 rng(5);
  auto records = synthetic(rng, 3, 40, 0.5);
  const auto base = by_method(aggregate(records));

  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(by_method(aggregate(shuffled)) == base);
  }

  auto relabelled = records;
  for (auto& r : relabelled) r.rater_id = "rater-" + r.rater_id + "-" + r.image_id;
  CHECK(by_method(aggregate(relabelled)) == base);

  std::uniform_int_distribution<std::size_t> pick(0, records.size() - 1);
  int flips = 0;
  for (int trial = 0; trial < 300 && flips < 100; ++trial) {
    const std::size_t i = pick(rng);
    if (records[i].score == 1) continue;
    auto flipped = records;
    flipped[i].score = 1;
    const auto after = by_method(aggregate(flipped));
    const auto& before_mean = base.at(records[i].method).at(records[i].metric);
    const auto& after_mean = after.at(records[i].method).at(records[i].metric);
    CHECK_FALSE(after_mean < before_mean);
    ++flips;
  }
  CHECK(flips > 0);
}

TEST_CASE("aggregation errors") {
  std::vector<RatingRecord> ok;
  for (const Metric m : kAllMetrics)
    for (int r = 0; r < 3; ++r) ok.push_back({"A", "i", m, "r" + std::to_string(r), 1});

  auto dup = ok;
  dup.push_back(dup.front());
  CHECK(code_of([&] { aggregate(dup); }) == ErrorCode::DuplicateRating);

  auto short_panel = ok;
  for (int r = 0; r < 3; ++r) short_panel.push_back({"A", "j", Metric::EditFaithfulness, "r" + std::to_string(r), 1});
  for (int r = 0; r < 3; ++r) short_panel.push_back({"A", "j", Metric::ContentPreservation, "r" + std::to_string(r), 1});
  for (int r = 0; r < 2; ++r) short_panel.push_back({"A", "j", Metric::OverallInstructionFollowing, "r" + std::to_string(r), 1});
  CHECK(code_of([&] { aggregate(short_panel); }) == ErrorCode::IncompletePanel);

  auto missing_metric = ok;
  for (int r = 0; r < 3; ++r) missing_metric.push_back({"A", "k", Metric::EditFaithfulness, "r" + std::to_string(r), 0});
  CHECK(code_of([&] { aggregate(missing_metric); }) == ErrorCode::IncompletePanel);

  std::vector<RatingRecord> even;
  for (const Metric m : kAllMetrics)
    for (int r = 0; r < 2; ++r) even.push_back({"A", "i", m, "r" + std::to_string(r), 1});
  CHECK(code_of([&] { aggregate(even); }) == ErrorCode::EvenPanel);

  CHECK(code_of([] { parse_ratings_csv("method,image_id,metric,rater_id,score\nA,i,EditFaithfulness,r1,2\n"); }) ==
        ErrorCode::PreconditionViolation);
  CHECK(code_of([] { parse_ratings_csv("method,image_id,metric,rater_id,score\nA,i,Beauty,r1,1\n"); }) ==
        ErrorCode::PreconditionViolation);
  CHECK(code_of([] { parse_ratings_csv("wrong,header\n"); }) == ErrorCode::PreconditionViolation);
  CHECK(code_of([] { parse_ratings_csv("method,image_id,metric,rater_id,score\nA,i,EditFaithfulness,r1\n"); }) ==
        ErrorCode::PreconditionViolation);
}

TEST_CASE("rating and score formats round trip") {
  std::mt19937 rng(31);
  auto records = synthetic(rng, 2, 7, 0.5);
  for (auto& r : records)
    if (r.method == "m0") r.method = "Method, with \"comma\"";
  const auto back = parse_ratings(ratings_to_csv(records));
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].method == records[i].method);
    CHECK(back[i].score == records[i].score);
    CHECK(back[i].metric == records[i].metric);
  }

  const auto jsonl = parse_ratings(
      R"({"method":"A","image_id":"i","metric":"Edit Faithfulness","rater_id":"r1","score":1})" "\n"
      R"({"method":"A","image_id":"i","metric":"ContentPreservation","rater_id":"r1","score":0})" "\n");
  REQUIRE(jsonl.size() == 2);
  CHECK(jsonl[0].metric == Metric::EditFaithfulness);
  CHECK(jsonl[1].score == 0);

  const auto ranked = rank_methods(aggregate(table_corpus()));
  const std::string csv = render_csv(ranked);
  CHECK(csv.rfind("method,rank,images,EditFaithfulness,ContentPreservation,OverallInstructionFollowing,", 0) == 0);
  CHECK(csv.find("IIIE,1,1200,0.51,0.78,0.80") != std::string::npos);
  const auto scores = parse_scores_csv(csv);
  REQUIRE(scores.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(scores[i].method == ranked[i].score.method);
    CHECK(scores[i].images == 1200);
    for (const Metric m : kAllMetrics) {
      CHECK(scores[i].means.at(m).num == ranked[i].score.means.at(m).num);
      CHECK(scores[i].means.at(m).den == ranked[i].score.means.at(m).den);
    }
  }
}
