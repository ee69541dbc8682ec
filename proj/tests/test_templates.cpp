#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "helpers.hpp"

using namespace haluj;

namespace {
const std::filesystem::path kAssets =
    std::filesystem::path(HALUJ_SOURCE_DIR) / "assets" / "templates";
}

TEST_CASE("compiled-in templates are byte-identical to the shipped assets") {
  const TemplateLibrary lib;
  for (TemplateId id : kAllTemplateIds) {
    const auto file = kAssets / (std::string(template_id_name(id)) + ".txt");
    CAPTURE(file.string());
    REQUIRE(std::filesystem::exists(file));
    CHECK(lib.get(id).body == jsonl::read_file(file));
  }
}

TEST_CASE("placeholder sets are as published") {
  const TemplateLibrary lib;
  using S = std::set<std::string>;
  CHECK(lib.get(TemplateId::gen_partial_irrelevant).required_placeholders ==
        S{"claim", "evidence", "label"});
  CHECK(lib.get(TemplateId::gen_misleading).required_placeholders ==
        S{"claim", "evidence", "label", "opposite_label"});
  CHECK(lib.get(TemplateId::filter_misleading).required_placeholders ==
        S{"claim", "evidence", "label"});
  CHECK(lib.get(TemplateId::synth_golden).required_placeholders ==
        S{"additional_info", "claim", "formatted_evidences", "label"});
  CHECK(lib.get(TemplateId::reformat_golden).required_placeholders ==
        S{"claim", "critique", "evidence"});
  CHECK(lib.get(TemplateId::score_critique).required_placeholders == S{"prompt", "response"});
  CHECK(lib.get(TemplateId::extract_categories).required_placeholders ==
        S{"critique", "evidence"});
  CHECK(lib.get(TemplateId::detection_formatted).required_placeholders ==
        S{"claim", "evidences"});
  CHECK(lib.get(TemplateId::detection_plain).required_placeholders == S{"claim", "evidences"});
}

TEST_CASE("render substitutes and enforces exact binding coverage") {
  const Template t = make_template(TemplateId::detection_plain, "A {x} and {y_2}.");
  CHECK(render(t, {{"x", "1"}, {"y_2", "2"}}) == "A 1 and 2.");

  SECTION("missing placeholder") {
    try {
      render(t, {{"x", "1"}});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::missing_placeholder);
    }
  }
  SECTION("unknown binding") {
    try {
      render(t, {{"x", "1"}, {"y_2", "2"}, {"z", "3"}});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unknown_placeholder);
    }
  }
}

TEST_CASE("doubled braces render as literals") {
  const Template t = make_template(TemplateId::detection_plain, "{{\n  \"k\": {v}\n}}");
  CHECK(render(t, {{"v", "1"}}) == "{\n  \"k\": 1\n}");
}

TEST_CASE("substituted values are not rescanned") {
  const Template t = make_template(TemplateId::detection_plain, "say {x}");
  CHECK(render(t, {{"x", "{y}"}}) == "say {y}");
}

TEST_CASE("malformed template bodies fail at load") {
  CHECK_THROWS_AS(make_template(TemplateId::detection_plain, "stray { here"), Error);
  CHECK_THROWS_AS(make_template(TemplateId::detection_plain, "stray } here"), Error);
  CHECK_THROWS_AS(make_template(TemplateId::detection_plain, "{9bad}"), Error);
  CHECK_NOTHROW(make_template(TemplateId::detection_plain, "{{fine}} {_ok}"));
}

TEST_CASE("rendered detection templates contain no leftover braces") {
  const TemplateLibrary lib;
  const Instance inst = th::make_instance("tp", Label::True, "ooppppr");
  for (TemplateId id : {TemplateId::detection_formatted, TemplateId::detection_plain}) {
    const std::string prompt = lib.render(
        id, {{"claim", inst.claim}, {"evidences", format_evidence_list(inst.evidence)}});
    CHECK(prompt.find(inst.claim) != std::string::npos);
    CHECK(prompt.find("{claim}") == std::string::npos);
    CHECK(prompt.find("{evidences}") == std::string::npos);
  }
}

TEST_CASE("formatted detection prompt ends with the response-format block; plain does not") {
  const TemplateLibrary lib;
  const Instance inst = th::make_instance("tail", Label::True, "ooppppr");
  const Bindings b{{"claim", inst.claim}, {"evidences", format_evidence_list(inst.evidence)}};
  const std::string formatted = lib.render(TemplateId::detection_formatted, b);
  const std::string plain = lib.render(TemplateId::detection_plain, b);
  CHECK(formatted.find("[response format]") != std::string::npos);
  CHECK(plain.find("[response format]") == std::string::npos);
  // both variants state the two-key dictionary contract in the instructions
  CHECK(formatted.find("\"factuality\"") != std::string::npos);
  CHECK(plain.find("\"factuality\"") != std::string::npos);
  // the two prompts share their head; formatted appends a tail
  CHECK(formatted.rfind(plain, 0) == 0);
  CHECK(formatted.size() > plain.size());
}

TEST_CASE("format_evidence_list numbers by eid with blank-line joins") {
  std::vector<EvidenceItem> ev{{1, "first text", EvidenceCategory::HighlyRelated},
                               {2, "second text", EvidenceCategory::HighlyRelated}};
  CHECK(format_evidence_list(ev) == "1. first text\n\n2. second text");
  ev[0].eid = 7;
  ev[1].eid = 3;
  CHECK(format_evidence_list(ev) == "7. first text\n\n3. second text");
  CHECK_THROWS_AS(format_evidence_list({}), Error);
}

TEST_CASE("templates_dir override replaces matching files only") {
  const auto dir = th::temp_dir("tpl-override");
  {
    std::ofstream out(dir / "detection_plain.txt");
    out << "custom {claim} :: {evidences}";
  }
  const TemplateLibrary lib = TemplateLibrary::with_overrides(dir);
  CHECK(lib.get(TemplateId::detection_plain).body == "custom {claim} :: {evidences}");
  CHECK(lib.get(TemplateId::detection_formatted).body ==
        TemplateLibrary().get(TemplateId::detection_formatted).body);
}

TEST_CASE("label words for prompt bindings") {
  CHECK(label_word(Label::True) == "true");
  CHECK(label_word(Label::Neutral) == "neutral");
  CHECK(opposite_label_word(Label::True) == "false");
  CHECK(opposite_label_word(Label::False) == "true");
  CHECK_THROWS_AS(opposite_label_word(Label::Neutral), Error);
}
