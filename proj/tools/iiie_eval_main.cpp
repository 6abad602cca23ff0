#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "iiie/iiie.h"

namespace {

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { iiie_string_free(s); }
};

bool read_text(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

int report(iiie_status status) {
  if (status != IIIE_OK) std::fprintf(stderr, "iiie-eval: %s: %s\n", iiie_status_name(status), iiie_last_error());
  return status == IIIE_OK ? 0 : static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregate 0/1 rater scores into per-method means"};
  app.require_subcommand(1);

  std::string in_path, out_path;
  auto* aggregate = app.add_subcommand("aggregate", "Majority-vote ratings and write the ranked CSV");
  aggregate->add_option("--in", in_path, "Ratings (CSV or JSONL)")->required();
  aggregate->add_option("--out", out_path, "Aggregate CSV to write")->required();

  auto* rank = app.add_subcommand("rank", "Print the ranked comparison table");
  rank->add_option("--in", in_path, "Aggregate CSV or raw ratings")->required();

  CLI11_PARSE(app, argc, argv);

  std::string text;
  if (!read_text(in_path, text)) {
    std::fprintf(stderr, "iiie-eval: cannot read %s\n", in_path.c_str());
    return static_cast<int>(IIIE_IO_ERROR);
  }

  if (*aggregate) {
    OwnedString csv, table;
    const auto st = iiie_eval_aggregate(text.c_str(), &csv.s, &table.s);
    if (st != IIIE_OK) return report(st);
    std::ofstream out(out_path, std::ios::binary);
    if (!(out << csv.s)) {
      std::fprintf(stderr, "iiie-eval: cannot write %s\n", out_path.c_str());
      return static_cast<int>(IIIE_IO_ERROR);
    }
    std::cout << table.s;
    return 0;
  }

  OwnedString table;
  const auto st = iiie_eval_rank(text.c_str(), &table.s);
  if (st != IIIE_OK) return report(st);
  std::cout << table.s;
  return 0;
}
