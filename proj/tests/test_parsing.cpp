#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace haluj;

TEST_CASE("find_balanced_block returns the first top-level block") {
  const auto b = parsing::find_balanced_block("noise {\"a\": 1} trailing {\"b\": 2}", '{', '}');
  REQUIRE(b);
  CHECK(b->begin == 6);
  CHECK(b->end == 14);

  CHECK_FALSE(parsing::find_balanced_block("no braces here", '{', '}'));
  CHECK_FALSE(parsing::find_balanced_block("{unclosed", '{', '}'));
}

TEST_CASE("find_balanced_block tracks nesting and strings") {
  const std::string text = R"(pre {"a": {"b": "}"}, "c": '}'} post)";
  const auto b = parsing::find_balanced_block(text, '{', '}');
  REQUIRE(b);
  CHECK(text.substr(b->begin, b->end - b->begin) == R"({"a": {"b": "}"}, "c": '}'})");
}

TEST_CASE("find_balanced_block ignores escaped quotes") {
  const std::string text = R"({"a": "quote \" then } inside"})";
  const auto b = parsing::find_balanced_block(text, '{', '}');
  REQUIRE(b);
  CHECK(b->end == text.size());
}

TEST_CASE("parse_first_object handles plain JSON and prose wrappers") {
  auto j = parsing::parse_first_object(R"(Sure! Here you go: {"x": 1} hope that helps)");
  REQUIRE(j);
  CHECK(j->at("x") == 1);

  CHECK_FALSE(parsing::parse_first_object("no object"));
  CHECK_FALSE(parsing::parse_first_object("{broken"));
}

TEST_CASE("normalize_literals converts script-style literals") {
  SECTION("single-quoted strings") {
    auto j = parsing::parse_first_object("{'key': 'value'}");
    REQUIRE(j);
    CHECK(j->at("key") == "value");
  }
  SECTION("bare python booleans and None") {
    auto j = parsing::parse_first_object("{'a': True, 'b': False, 'c': None}");
    REQUIRE(j);
    CHECK(j->at("a") == true);
    CHECK(j->at("b") == false);
    CHECK(j->at("c").is_null());
  }
  SECTION("True inside a string is untouched") {
    auto j = parsing::parse_first_object(R"({"a": "True story", "b": True})");
    REQUIRE(j);
    CHECK(j->at("a") == "True story");
    CHECK(j->at("b") == true);
  }
  SECTION("word boundaries respected") {
    auto j = parsing::parse_first_object("{'a': 'Truely None-ish TrueX'}");
    REQUIRE(j);
    CHECK(j->at("a") == "Truely None-ish TrueX");
  }
  SECTION("escaped single quote inside single-quoted string") {
    auto j = parsing::parse_first_object(R"({'a': 'it\'s fine'})");
    REQUIRE(j);
    CHECK(j->at("a") == "it's fine");
  }
  SECTION("double quote inside single-quoted string gets escaped") {
    auto j = parsing::parse_first_object("{'a': 'say \"hi\"'}");
    REQUIRE(j);
    CHECK(j->at("a") == "say \"hi\"");
  }
  SECTION("literal newline inside a string becomes \\n") {
    auto j = parsing::parse_first_object("{\"a\": \"line one\nline two\"}");
    REQUIRE(j);
    CHECK(j->at("a") == "line one\nline two");
  }
}

TEST_CASE("parse_first_array finds lists in prose") {
  auto j = parsing::parse_first_array("Paragraphs: ['one', 'two', 'three', 'four'] done");
  REQUIRE(j);
  REQUIRE(j->is_array());
  CHECK(j->size() == 4);
  CHECK(j->at(2) == "three");
}

TEST_CASE("arrays of objects with python literals parse") {
  auto j = parsing::parse_first_array(
      "[{'evidence': 'text a', 'explanation': 'why a'}, {'evidence': 'text b', 'explanation': "
      "'why b'}, {'evidence': 'text c', 'explanation': 'why c'}]");
  REQUIRE(j);
  CHECK(j->size() == 3);
  CHECK(j->at(1).at("explanation") == "why b");
}

TEST_CASE("word_count splits on whitespace runs") {
  CHECK(parsing::word_count("") == 0);
  CHECK(parsing::word_count("   ") == 0);
  CHECK(parsing::word_count("one") == 1);
  CHECK(parsing::word_count(" one  two\tthree\nfour ") == 4);
}

TEST_CASE("parse_verdict accepts the contract and variants") {
  SECTION("canonical") {
    const auto p = parse_verdict(R"({"reasoning": "solid", "factuality": "True"})");
    CHECK(p.valid);
    CHECK(p.factuality == Label::True);
    CHECK(p.reasoning == "solid");
  }
  SECTION("prose wrapper and lowercase label") {
    const auto p = parse_verdict("Answer:\n{\"reasoning\": \"ok\", \"factuality\": \"false\"}\n");
    CHECK(p.valid);
    CHECK(p.factuality == Label::False);
  }
  SECTION("boolean factuality") {
    CHECK(parse_verdict(R"({"reasoning": "r", "factuality": true})").factuality == Label::True);
    CHECK(parse_verdict(R"({"reasoning": "r", "factuality": False})").factuality == Label::False);
  }
  SECTION("python-style response") {
    const auto p = parse_verdict("{'reasoning': 'it checks out', 'factuality': 'Neutral'}");
    CHECK(p.valid);
    CHECK(p.factuality == Label::Neutral);
  }
}

TEST_CASE("parse_verdict rejections are total, invalid, empty-reasoning") {
  const std::vector<std::string> bad{
      "",
      "plain text refusal",
      "{\"reasoning\": \"r\"}",
      "{\"factuality\": \"True\"}",
      "{\"reasoning\": 5, \"factuality\": \"True\"}",
      "{\"reasoning\": \"r\", \"factuality\": \"perhaps\"}",
      "{\"reasoning\": \"r\", \"factuality\": 1}",
      "[\"reasoning\", \"factuality\"]",
      "{unbalanced",
  };
  for (const auto& raw : bad) {
    CAPTURE(raw);
    const auto p = parse_verdict(raw);
    CHECK_FALSE(p.valid);
    CHECK(p.factuality == Label::Invalid);
    CHECK(p.reasoning.empty());
    CHECK(p.raw == raw);
  }
}
