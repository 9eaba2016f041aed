#include <doctest.h>

#include <cmath>
#include <fstream>

#include "corpus.hpp"
#include "error.hpp"
#include "oracles.hpp"

using namespace sparft;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Internal;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("difficulty endpoints and midpoint") {
  CHECK(estimate_difficulty(0, 128) == 100.0);
  CHECK(estimate_difficulty(128, 128) == 0.0);
  CHECK(estimate_difficulty(64, 128) == 50.0);
}

TEST_CASE("difficulty rejects zero attempts and excess successes") {
  CHECK(code_of([] { estimate_difficulty(0, 0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { estimate_difficulty(5, 4); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("difficulty is monotone and complements the success rate") {
  for (std::uint32_t n = 1; n <= 128; ++n) {
    double prev = 101.0;
    for (std::uint32_t s = 0; s <= n; ++s) {
      const double d = estimate_difficulty(s, n);
      CHECK(d < prev);
      CHECK(std::abs(d + 100.0 * s / n - 100.0) <= 1e-12);
      prev = d;
    }
  }
}

TEST_CASE("load three records") {
  auto c = parse_corpus(R"({"id":"a","embedding":[1,2,3,4]}
{"id":"b","embedding":[0,0,0,0],"meta":{"src":"x"}}
{"id":"c","embedding":[1,1,1,1]}
)");
  CHECK(c.size() == 3);
  CHECK(c.dim() == 4);
  CHECK(c[1].id == "b");
  CHECK(c[1].meta.at("src") == "x");
  CHECK(c.find("c") == 2u);
  CHECK_FALSE(c.find("zz"));
}

TEST_CASE("missing id names the line") {
  const std::string text = "{\"id\":\"a\",\"embedding\":[1]}\n{\"embedding\":[2]}\n";
  CHECK(code_of([&] { parse_corpus(text); }) == ErrorCode::Parse);
  CHECK(message_of([&] { parse_corpus(text); }).find("line 2") != std::string::npos);
}

TEST_CASE("mixed dimensions are rejected") {
  const std::string text = "{\"id\":\"a\",\"embedding\":[1,2,3,4]}\n{\"id\":\"b\",\"embedding\":[1,2,3,4,5]}\n";
  CHECK(code_of([&] { parse_corpus(text); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("duplicate ids are rejected") {
  const std::string text = "{\"id\":\"a\",\"embedding\":[1]}\n{\"id\":\"a\",\"embedding\":[2]}\n";
  CHECK(code_of([&] { parse_corpus(text); }) == ErrorCode::DuplicateId);
}

TEST_CASE("malformed json and blank lines") {
  CHECK(code_of([] { parse_corpus("{\"id\":\"a\",\"embedding\":[1]\n"); }) == ErrorCode::Parse);
  CHECK(parse_corpus("\n{\"id\":\"a\",\"embedding\":[1]}\n\n").size() == 1);
}

TEST_CASE("load is deterministic and round-trips through save") {
  oracle::TempDir dir("corpus");
  std::mt19937_64 gen(5);
  const auto rows = oracle::random_rows(gen, 20, 6);
  std::vector<Example> ex;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Example e;
    e.id = "e" + std::to_string(i);
    e.embedding = rows[i];
    e.difficulty = static_cast<double>(i) * 5.0;
    ex.push_back(e);
  }
  Corpus c(ex);
  save_corpus(c, dir / "c.jsonl");
  const auto a = load_corpus(dir / "c.jsonl");
  const auto b = load_corpus(dir / "c.jsonl");
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].embedding == rows[i]);
    CHECK(a[i].embedding == b[i].embedding);
    CHECK(a[i].difficulty == c[i].difficulty);
  }
  CHECK(serialize_corpus(a) == serialize_corpus(b));
}

TEST_CASE("annotate two ids") {
  auto c = parse_corpus("{\"id\":\"x\",\"embedding\":[1]}\n{\"id\":\"y\",\"embedding\":[2]}\n");
  auto log = parse_attempts("{\"id\":\"x\",\"attempts\":128,\"successes\":0}\n"
                            "{\"id\":\"y\",\"attempts\":128,\"successes\":128}\n");
  auto r = annotate_difficulty(c, log);
  CHECK(r.corpus.difficulties() == std::vector<double>{100.0, 0.0});
  CHECK(r.warnings.empty());
}

TEST_CASE("annotate with a missing id names it") {
  auto c = parse_corpus("{\"id\":\"x\",\"embedding\":[1]}\n{\"id\":\"y\",\"embedding\":[2]}\n");
  auto log = parse_attempts("{\"id\":\"x\",\"attempts\":128,\"successes\":0}\n");
  CHECK(code_of([&] { annotate_difficulty(c, log); }) == ErrorCode::MissingId);
  CHECK(message_of([&] { annotate_difficulty(c, log); }).find("'y'") != std::string::npos);
}

TEST_CASE("annotate warns about unknown ids") {
  auto c = parse_corpus("{\"id\":\"x\",\"embedding\":[1]}\n");
  auto log = parse_attempts("{\"id\":\"x\",\"attempts\":4,\"successes\":1}\n"
                            "{\"id\":\"ghost\",\"attempts\":4,\"successes\":4}\n");
  auto r = annotate_difficulty(c, log);
  CHECK(r.corpus.difficulties() == std::vector<double>{75.0});
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("ghost") != std::string::npos);
}

TEST_CASE("annotate rejects zero attempts and repeated ids") {
  auto c = parse_corpus("{\"id\":\"x\",\"embedding\":[1]}\n");
  CHECK(code_of([&] { annotate_difficulty(c, parse_attempts("{\"id\":\"x\",\"attempts\":0,\"successes\":0}\n")); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] {
          annotate_difficulty(c, parse_attempts("{\"id\":\"x\",\"attempts\":2,\"successes\":0}\n"
                                                "{\"id\":\"x\",\"attempts\":2,\"successes\":1}\n"));
        }) == ErrorCode::DuplicateId);
  CHECK(code_of([&] { parse_attempts("{\"id\":\"x\",\"attempts\":2,\"successes\":3}\n"); }) == ErrorCode::Parse);
}

TEST_CASE("corpus invariants hold on construction") {
  Example e;
  e.id = "a";
  e.embedding = {1.0};
  e.attempts = 2;
  e.successes = 3;
  CHECK(code_of([&] { Corpus({e}); }) == ErrorCode::InvalidArgument);
  e.successes = 1;
  e.difficulty = 120.0;
  CHECK(code_of([&] { Corpus({e}); }) == ErrorCode::InvalidArgument);
  e.difficulty.reset();
  Corpus c({e});
  CHECK(code_of([&] { c.difficulties(); }) == ErrorCode::MissingId);
}

TEST_CASE("unreadable file is an io error") {
  CHECK(code_of([] { load_corpus("/nonexistent/definitely/missing.jsonl"); }) == ErrorCode::Io);
}
