#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace haluj;

namespace {

DetectionResult result_for(const Instance& inst, Label predicted, bool valid = true) {
  DetectionResult r;
  r.instance_id = inst.id;
  r.raw = valid ? th::verdict_json(predicted, "some reasoning about " + inst.id)
                : "unparseable noise";
  r.parsed = parse_verdict(r.raw);
  r.correct = r.parsed.valid && r.parsed.factuality == inst.label;
  for (size_t k = 0; k < inst.evidence.size(); ++k) r.presentation.push_back(static_cast<int>(k) + 1);
  return r;
}

}  // namespace

TEST_CASE("label_accuracy counts invalid parses as incorrect") {
  const Instance a = th::make_instance("a", Label::True, "opr");
  const Instance b = th::make_instance("b", Label::False, "opr");
  const std::vector<DetectionResult> results{
      result_for(a, Label::True),          // correct
      result_for(b, Label::False),         // correct
      result_for(a, Label::True, false),   // invalid -> incorrect
      result_for(b, Label::True),          // wrong label
  };
  CHECK(label_accuracy(results) == 0.5);
  CHECK_THROWS_AS(label_accuracy({}), Error);
}

TEST_CASE("score_critiques averages judge scores over included instances") {
  const TemplateLibrary lib;
  const Instance a = th::make_instance("sa", Label::True, "opr");
  const Instance b = th::make_instance("sb", Label::False, "opr");
  const std::vector<Instance> instances{a, b};
  const std::vector<DetectionResult> results{result_for(a, Label::True),
                                             result_for(b, Label::True)};
  JudgeOptions opts;

  auto judge_prompt = [&](const DetectionResult& r, const Instance& inst) {
    const std::string detect_prompt =
        lib.render(TemplateId::detection_formatted,
                   {{"claim", inst.claim},
                    {"evidences", format_evidence_list(inst.evidence)}});
    return lib.render(TemplateId::score_critique,
                      {{"prompt", detect_prompt}, {"response", r.raw}});
  };

  ScriptedBackend judge;
  judge.add(judge_prompt(results[0], a), R"({"reasoning": "thorough", "score": 90})");
  judge.add(judge_prompt(results[1], b), R"({"reasoning": "confused", "score": 80})");

  const auto scoring = score_critiques(results, instances, judge, lib, opts);
  CHECK(scoring.mean == 85.0);
  CHECK(scoring.excluded == 0);
  REQUIRE(scoring.scores.size() == 2);
  CHECK(scoring.scores[0].instance_id == "sa");
  CHECK(scoring.scores[0].score == 90);
  CHECK(scoring.scores[0].judge_reasoning == "thorough");
  CHECK(scoring.scores[1].score == 80);
}

TEST_CASE("score_critiques retries, excludes, and can run out of judges") {
  const TemplateLibrary lib;
  const Instance a = th::make_instance("ra", Label::True, "opr");
  const Instance b = th::make_instance("rb", Label::False, "opr");
  const std::vector<Instance> instances{a, b};
  const std::vector<DetectionResult> results{result_for(a, Label::True),
                                             result_for(b, Label::False)};
  JudgeOptions opts;

  auto judge_prompt = [&](const DetectionResult& r, const Instance& inst) {
    const std::string detect_prompt =
        lib.render(TemplateId::detection_formatted,
                   {{"claim", inst.claim},
                    {"evidences", format_evidence_list(inst.evidence)}});
    return lib.render(TemplateId::score_critique,
                      {{"prompt", detect_prompt}, {"response", r.raw}});
  };

  SECTION("a malformed first draw is retried") {
    ScriptedBackend judge;
    judge.add(judge_prompt(results[0], a), 0, "no object here");
    judge.add(judge_prompt(results[0], a), 1, R"({"score": 70})");
    judge.add(judge_prompt(results[1], b), R"({"score": 60})");
    const auto scoring = score_critiques(results, instances, judge, lib, opts);
    CHECK(scoring.mean == 65.0);
    CHECK(scoring.excluded == 0);
  }
  SECTION("out-of-range and fractional scores exclude the instance") {
    ScriptedBackend judge;
    judge.add(judge_prompt(results[0], a), 0, R"({"score": 150})");
    judge.add(judge_prompt(results[0], a), 1, R"({"score": 62.5})");
    judge.add(judge_prompt(results[0], a), 2, R"({"score": 0})");
    judge.add(judge_prompt(results[1], b), R"({"score": 40})");
    const auto scoring = score_critiques(results, instances, judge, lib, opts);
    CHECK(scoring.mean == 40.0);
    CHECK(scoring.excluded == 1);
    REQUIRE(scoring.scores.size() == 1);
    CHECK(scoring.scores[0].instance_id == "rb");
  }
  SECTION("backend errors count toward exclusion instead of aborting") {
    ScriptedBackend judge;  // no entries: every call raises ScriptMiss
    CHECK_THROWS_AS(score_critiques(results, instances, judge, lib, opts), Error);
    try {
      score_critiques(results, instances, judge, lib, opts);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::all_excluded);
    }
  }
}

TEST_CASE("score_critiques judges the raw response even when unparseable") {
  const TemplateLibrary lib;
  const Instance a = th::make_instance("rawj", Label::True, "opr");
  const std::vector<Instance> instances{a};
  const std::vector<DetectionResult> results{result_for(a, Label::True, false)};
  REQUIRE(results[0].raw == "unparseable noise");

  OracleBackend judge;  // scores any response 100 without reading it
  JudgeOptions opts;
  const auto scoring = score_critiques(results, instances, judge, lib, opts);
  CHECK(scoring.mean == 100.0);
}

TEST_CASE("extract_category_map totalizes with the documented precedence") {
  const TemplateLibrary lib;
  const Instance inst = th::make_instance("em", Label::True, "opprr");
  JudgeOptions opts;
  const std::string critique = "placeholder critique body";
  const std::string prompt = lib.render(TemplateId::extract_categories,
                                        {{"evidence", format_evidence_list(inst.evidence)},
                                         {"critique", critique}});

  SECTION("duplicates resolve toward the most related category") {
    ScriptedBackend judge;
    judge.add(prompt, json{{"Completely Irrelevant Evidence", json::array({1, 2})},
                           {"Partial Irrelevant Evidence", json::array({2, 3})},
                           {"Highly related Evidence", json::array({2, 4})},
                           {"Unmentioned Evidence", json::array({4, 9})}}
                          .dump());
    const auto map = extract_category_map(inst, critique, judge, lib, opts);
    CHECK_FALSE(map.extraction_failed);
    REQUIRE(map.assignment.size() == 5);  // totalized over eids 1..5
    CHECK(map.assignment.at(1) == EvidenceCategory::CompletelyIrrelevant);
    CHECK(map.assignment.at(2) == EvidenceCategory::HighlyRelated);  // HR beats PI and CI
    CHECK(map.assignment.at(3) == EvidenceCategory::PartiallyIrrelevant);
    CHECK(map.assignment.at(4) == EvidenceCategory::HighlyRelated);  // HR beats Unmentioned
    CHECK(map.assignment.at(5) == EvidenceCategory::Unmentioned);    // absent -> Unmentioned
  }
  SECTION("alternate key spellings are accepted") {
    ScriptedBackend judge;
    judge.add(prompt, json{{"Highly Related Evidence", json::array({1})},
                           {"Partially Irrelevant Evidence", json::array({2})}}
                          .dump());
    const auto map = extract_category_map(inst, critique, judge, lib, opts);
    CHECK(map.assignment.at(1) == EvidenceCategory::HighlyRelated);
    CHECK(map.assignment.at(2) == EvidenceCategory::PartiallyIrrelevant);
  }
  SECTION("judge failure degrades to all-Unmentioned with the flag raised") {
    ScriptedBackend judge;
    judge.add(prompt, "never an object");
    const auto map = extract_category_map(inst, critique, judge, lib, opts);
    CHECK(map.extraction_failed);
    REQUIRE(map.assignment.size() == 5);
    for (const auto& [eid, cat] : map.assignment) CHECK(cat == EvidenceCategory::Unmentioned);
  }
  SECTION("an empty critique is a caller error") {
    ScriptedBackend judge;
    CHECK_THROWS_AS(extract_category_map(inst, "", judge, lib, opts), Error);
  }
}

TEST_CASE("evidence_matching_rate scores pieces and fills the confusion grid") {
  const Instance a = th::make_instance("ma", Label::True, "oppr");  // 4 pieces
  const Instance b = th::make_instance("mb", Label::False, "oppr");
  CategoryMap map_a;
  map_a.instance_id = "ma";
  map_a.assignment = {{1, EvidenceCategory::CompletelyIrrelevant},
                      {2, EvidenceCategory::PartiallyIrrelevant},
                      {3, EvidenceCategory::PartiallyIrrelevant},
                      {4, EvidenceCategory::HighlyRelated}};  // 4/4
  CategoryMap map_b;
  map_b.instance_id = "mb";
  map_b.assignment = {{1, EvidenceCategory::PartiallyIrrelevant},  // wrong (gold o)
                      {2, EvidenceCategory::PartiallyIrrelevant},
                      {3, EvidenceCategory::Unmentioned},          // wrong (gold p)
                      {4, EvidenceCategory::HighlyRelated}};       // 2/4

  const auto rep = evidence_matching_rate({map_a, map_b}, {a, b});
  CHECK(rep.n_pieces == 8);
  CHECK(rep.matched == 6);
  CHECK(rep.rate == 0.75);
  CHECK(rep.macro_rate == Catch::Approx((1.0 + 0.5) / 2.0));
  CHECK(rep.unmentioned == 1);
  // rows predicted o/p/r/unmentioned; columns gold o/p/r
  CHECK(rep.confusion[0] == std::array<long, 3>{1, 0, 0});
  CHECK(rep.confusion[1] == std::array<long, 3>{1, 3, 0});
  CHECK(rep.confusion[2] == std::array<long, 3>{0, 0, 2});
  CHECK(rep.confusion[3] == std::array<long, 3>{0, 1, 0});

  CategoryMap misnamed = map_b;
  misnamed.instance_id = "zz";
  CHECK_THROWS_AS(evidence_matching_rate({map_a, misnamed}, {a, b}), Error);
  CHECK_THROWS_AS(evidence_matching_rate({}, {}), Error);
}

TEST_CASE("macro and micro rates diverge when instance sizes differ") {
  const Instance small = th::make_instance("sm", Label::True, "opr");    // 3 pieces
  const Instance large = th::make_instance("lg", Label::True, "oopppprr");  // 8 pieces
  CategoryMap perfect_small;
  perfect_small.instance_id = "sm";
  for (const auto& e : small.evidence) perfect_small.assignment[e.eid] = e.category;
  CategoryMap blank_large;
  blank_large.instance_id = "lg";
  for (const auto& e : large.evidence)
    blank_large.assignment[e.eid] = EvidenceCategory::Unmentioned;

  const auto rep = evidence_matching_rate({perfect_small, blank_large}, {small, large});
  CHECK(rep.rate == Catch::Approx(3.0 / 11.0));
  CHECK(rep.macro_rate == Catch::Approx(0.5));
  CHECK(rep.unmentioned == 8);
}

TEST_CASE("pearson matches hand-computed fixtures") {
  CHECK(pearson({1, 2, 3, 4}, {2, 4, 6, 8}) == Catch::Approx(1.0).margin(1e-12));
  CHECK(pearson({1, 2, 3, 4}, {8, 6, 4, 2}) == Catch::Approx(-1.0).margin(1e-12));
  // cov = 0 by symmetry
  CHECK(pearson({-2, -1, 0, 1, 2}, {4, 1, 0, 1, 4}) == Catch::Approx(0.0).margin(1e-12));
  // r = 0.9 fixture: x = {1,2,3}, y = {1,3,2} gives 1/2
  CHECK(pearson({1, 2, 3}, {1, 3, 2}) == Catch::Approx(0.5).margin(1e-12));

  CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(pearson({1}, {2}), Error);
  try {
    pearson({3, 3, 3}, {1, 2, 3});
    FAIL("expected constant_series");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::constant_series);
  }
}

TEST_CASE("pearson is invariant under positive affine maps") {
  std::mt19937_64 gen(7);
  std::vector<double> x, y, x2, y2;
  for (int i = 0; i < 40; ++i) {
    const double xi = static_cast<double>(rng::bounded_rand(gen, 1000));
    const double yi = static_cast<double>(rng::bounded_rand(gen, 1000));
    x.push_back(xi);
    y.push_back(yi);
    x2.push_back(3.5 * xi + 11.0);
    y2.push_back(0.25 * yi - 2.0);
  }
  CHECK(pearson(x2, y2) == Catch::Approx(pearson(x, y)).margin(1e-9));
}

TEST_CASE("format experiment reuses seeds across both passes") {
  const TemplateLibrary lib;
  std::vector<Instance> instances;
  for (int i = 0; i < 4; ++i)
    instances.push_back(th::make_instance("f" + std::to_string(i),
                                          i % 2 ? Label::False : Label::True, "ooppppr"));
  DetectOptions opts;
  opts.order = EvidenceOrder::shuffled;
  opts.seed = 5;

  SECTION("an oracle keeps both passes perfect") {
    OracleBackend oracle;
    const auto rep = run_format_experiment(instances, oracle, lib, opts);
    CHECK(rep.accuracy_formatted == 1.0);
    CHECK(rep.accuracy_plain == 1.0);
    REQUIRE(rep.agreement.size() == 4);
    for (const auto& row : rep.agreement) {
      CHECK(row.correct_formatted);
      CHECK(row.correct_plain);
    }
  }
  SECTION("a format-sensitive backend splits the two accuracies") {
    // answers only plain prompts correctly; formatted prompts get prose
    ScriptedBackend backend;
    for (const auto& inst : instances) {
      const std::uint64_t shuffle_seed = rng::derive_seed(opts.seed, "detect_shuffle", inst.id);
      const auto plain =
          build_detection_prompt(lib, inst, PromptMode::plain, opts.order, shuffle_seed);
      const auto formatted =
          build_detection_prompt(lib, inst, PromptMode::formatted, opts.order, shuffle_seed);
      backend.add(plain.prompt, th::verdict_json(inst.label, "plain-mode answer"));
      backend.add(formatted.prompt, "I cannot commit to the requested format.");
    }
    const auto rep = run_format_experiment(instances, backend, lib, opts);
    CHECK(rep.accuracy_formatted == 0.0);
    CHECK(rep.accuracy_plain == 1.0);
    for (const auto& row : rep.agreement) {
      CHECK_FALSE(row.correct_formatted);
      CHECK(row.correct_plain);
    }
  }
  SECTION("an empty instance list is rejected") {
    OracleBackend oracle;
    CHECK_THROWS_AS(run_format_experiment({}, oracle, lib, opts), Error);
  }
}

TEST_CASE("report serialization keeps every key and nulls the rest") {
  Report rep;
  rep.accuracy = 0.8;
  rep.n_instances = 10;
  const json j = rep;
  const std::vector<std::string> keys{"accuracy",      "critique_score_mean",
                                      "critique_scores", "excluded",
                                      "evidence_matching_rate", "per_category_confusion",
                                      "n_instances",   "n_pieces"};
  CHECK(j.size() == keys.size());
  for (const auto& k : keys) CHECK(j.contains(k));
  CHECK(j.at("accuracy") == 0.8);
  CHECK(j.at("critique_score_mean").is_null());
  CHECK(j.at("per_category_confusion").is_null());
  CHECK(j.at("n_instances") == 10);

  Report full = rep;
  full.confusion = Confusion{{{1, 0, 0}, {0, 2, 0}, {0, 0, 3}, {0, 0, 0}}};
  full.n_pieces = 6;
  const json j2 = full;
  CHECK(j2.at("per_category_confusion").is_array());
  CHECK(j2.at("per_category_confusion")[2][2] == 3);
}

TEST_CASE("agreement csv parses after trimming and enforces its shape") {
  const std::string text =
      "\n instance_id , human_score , judge_score \r\n"
      "a-1, 4, 80\n"
      "\n"
      "a-2, 2.5, 40\r\n";
  const auto data = parse_agreement_csv(text);
  CHECK(data.instance_ids == std::vector<std::string>{"a-1", "a-2"});
  CHECK(data.human == std::vector<double>{4.0, 2.5});
  CHECK(data.judge == std::vector<double>{80.0, 40.0});

  CHECK_THROWS_AS(parse_agreement_csv("instance_id,human_score\na,1\n"), Error);
  CHECK_THROWS_AS(parse_agreement_csv("id,human,judge\na,1,2\n"), Error);
  CHECK_THROWS_AS(
      parse_agreement_csv("instance_id,human_score,judge_score\na,high,2\n"), Error);
  CHECK_THROWS_AS(parse_agreement_csv("instance_id,human_score,judge_score\n"), Error);
  CHECK_THROWS_AS(parse_agreement_csv(""), Error);
}
