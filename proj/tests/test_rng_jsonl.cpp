#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <set>

#include "helpers.hpp"

using namespace haluj;

TEST_CASE("fnv1a64 matches known vectors") {
  // Published FNV-1a 64-bit test values.
  CHECK(rng::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(rng::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(rng::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("derive_seed separates stages and keys") {
  const std::uint64_t base = 42;
  CHECK(rng::derive_seed(base, "split") == rng::derive_seed(base, "split"));
  CHECK(rng::derive_seed(base, "split") != rng::derive_seed(base, "shuffle"));
  CHECK(rng::derive_seed(base, "s", "a") != rng::derive_seed(base, "s", "b"));
  CHECK(rng::derive_seed(base, "s", "a") != rng::derive_seed(base + 1, "s", "a"));
  // stage/key concatenation must not collide: ("ab","c") vs ("a","bc")
  CHECK(rng::derive_seed(base, "ab", "c") != rng::derive_seed(base, "a", "bc"));
}

TEST_CASE("bounded_rand stays in range and is deterministic") {
  std::mt19937_64 g1(7), g2(7);
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng::bounded_rand(g1, 13);
    CHECK(v < 13);
    CHECK(v == rng::bounded_rand(g2, 13));
  }
  std::mt19937_64 g3(1);
  CHECK(rng::bounded_rand(g3, 1) == 0);
}

TEST_CASE("bounded_rand covers the full range") {
  std::mt19937_64 gen(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) seen.insert(rng::bounded_rand(gen, 6));
  CHECK(seen == std::set<std::uint64_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("shuffle_permutation is a permutation and seed-stable") {
  std::mt19937_64 g1(99), g2(99), g3(100);
  const auto p1 = rng::shuffle_permutation(20, g1);
  const auto p2 = rng::shuffle_permutation(20, g2);
  const auto p3 = rng::shuffle_permutation(20, g3);
  CHECK(p1 == p2);
  CHECK(p1 != p3);
  std::set<size_t> seen(p1.begin(), p1.end());
  CHECK(seen.size() == 20);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 19);
}

TEST_CASE("jsonl round-trips records and skips blank lines") {
  const auto dir = th::temp_dir("jsonl");
  const auto path = dir / "recs.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id":"a","claim":"c","label":"True","evidence":"e"})" << "\n\n";
    out << "   \n";
    out << R"({"id":"b","claim":"c2","label":"Neutral","evidence":"e2"})" << "\n";
  }
  const auto recs = jsonl::read_records<SourceRecord>(path);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].id == "a");
  CHECK(recs[1].label == Label::Neutral);
}

TEST_CASE("jsonl reports the failing line") {
  const auto dir = th::temp_dir("jsonl-bad");
  const auto path = dir / "bad.jsonl";
  {
    std::ofstream out(path);
    out << "{\"ok\":1}\nnot json\n";
  }
  try {
    jsonl::read_lines(path);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io_error);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("read_lines on a missing file is an io error") {
  CHECK_THROWS_AS(jsonl::read_lines("/nonexistent/nowhere.jsonl"), Error);
}

TEST_CASE("atomic_write replaces content and leaves no temp file") {
  const auto dir = th::temp_dir("atomic");
  const auto path = dir / "nested" / "out.txt";
  jsonl::atomic_write(path, "first");
  jsonl::atomic_write(path, "second");
  CHECK(jsonl::read_file(path) == "second");
  size_t entries = 0;
  for (const auto& p : std::filesystem::directory_iterator(path.parent_path())) {
    (void)p;
    ++entries;
  }
  CHECK(entries == 1);
}

TEST_CASE("write_records emits one sorted-key JSON line per record") {
  const auto dir = th::temp_dir("write-recs");
  const auto path = dir / "out.jsonl";
  std::vector<SourceRecord> recs{{"b", "claim", Label::True, "ev"},
                                 {"a", "claim2", Label::False, "ev2"}};
  jsonl::write_records(path, recs);
  const std::string text = jsonl::read_file(path);
  CHECK(text.front() == '{');
  CHECK(text.back() == '\n');
  const auto back = jsonl::read_records<SourceRecord>(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "b");  // input order preserved
  // keys serialized sorted: claim < evidence < id < label
  const auto first_line = text.substr(0, text.find('\n'));
  CHECK(first_line.find("\"claim\"") < first_line.find("\"evidence\""));
  CHECK(first_line.find("\"evidence\"") < first_line.find("\"id\""));
}
