#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace haluj;

namespace {

SampleSet make_set(Label gold, const std::vector<std::string>& raws) {
  SampleSet set;
  set.instance_id = "sel";
  set.prompt = "prompt";
  set.gold = gold;
  for (const auto& raw : raws) set.candidates.push_back({raw, parse_verdict(raw)});
  return set;
}

}  // namespace

TEST_CASE("select_pair takes the earliest correct and earliest wrong candidates") {
  const auto set = make_set(Label::True, {th::verdict_json(Label::False, "wrong one"),
                                          th::verdict_json(Label::True, "right one"),
                                          th::verdict_json(Label::True, "right two"),
                                          th::verdict_json(Label::False, "wrong two")});
  const auto sel = select_pair(set);
  REQUIRE(sel.pair.has_value());
  CHECK_FALSE(sel.skip.has_value());
  CHECK(sel.pair->instance_id == "sel");
  CHECK(sel.pair->prompt == "prompt");
  CHECK(sel.pair->chosen == set.candidates[1].raw);
  CHECK(sel.pair->rejected == set.candidates[0].raw);
  CHECK(sel.pair->chosen_label == Label::True);
  CHECK(sel.pair->rejected_label == Label::False);
}

TEST_CASE("invalid candidates are rejected only when no valid-wrong exists") {
  SECTION("valid-wrong beats an earlier invalid") {
    const auto set = make_set(Label::True, {"complete garbage",
                                            th::verdict_json(Label::True, "right"),
                                            th::verdict_json(Label::Neutral, "off label")});
    const auto sel = select_pair(set);
    REQUIRE(sel.pair.has_value());
    CHECK(sel.pair->rejected == set.candidates[2].raw);
    CHECK(sel.pair->rejected_label == Label::Neutral);
  }
  SECTION("an invalid fallback keeps its raw text and Invalid label") {
    const auto set = make_set(Label::True, {th::verdict_json(Label::True, "right"),
                                            "not even close to json"});
    const auto sel = select_pair(set);
    REQUIRE(sel.pair.has_value());
    CHECK(sel.pair->rejected == "not even close to json");
    CHECK(sel.pair->rejected_label == Label::Invalid);
  }
}

TEST_CASE("select_pair skips when a side is missing") {
  const auto no_correct = select_pair(
      make_set(Label::True, {th::verdict_json(Label::False, "w"), "garbage"}));
  CHECK_FALSE(no_correct.pair.has_value());
  REQUIRE(no_correct.skip.has_value());
  CHECK(*no_correct.skip == SkipReason::no_correct);
  // an all-invalid set has no chosen either
  const auto all_invalid = select_pair(make_set(Label::True, {"junk", "more junk"}));
  REQUIRE(all_invalid.skip.has_value());
  CHECK(*all_invalid.skip == SkipReason::no_correct);

  const auto no_incorrect = select_pair(
      make_set(Label::False, {th::verdict_json(Label::False, "r1"),
                              th::verdict_json(Label::False, "r2")}));
  CHECK_FALSE(no_incorrect.pair.has_value());
  REQUIRE(no_incorrect.skip.has_value());
  CHECK(*no_incorrect.skip == SkipReason::no_incorrect);

  CHECK(std::string(skip_reason_name(SkipReason::no_correct)) == "no_correct");
  CHECK(std::string(skip_reason_name(SkipReason::no_incorrect)) == "no_incorrect");
}

TEST_CASE("sample_candidates draws n in index order") {
  const TemplateLibrary lib;
  const Instance inst = th::make_instance("sc", Label::True, "opr");
  const PromptBuild build = build_detection_prompt(lib, inst, PromptMode::formatted);
  ScriptedBackend backend;
  SamplingParams params = SamplingParams::preference_defaults();
  params.n_samples = 3;
  for (int i = 0; i < 3; ++i)
    backend.add(build.prompt, i, th::verdict_json(Label::True, "draw " + std::to_string(i)));

  const SampleSet set = sample_candidates(inst, backend, lib, params);
  CHECK(set.instance_id == inst.id);
  CHECK(set.prompt == build.prompt);
  CHECK(set.gold == Label::True);
  REQUIRE(set.candidates.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(set.candidates[static_cast<size_t>(i)].parsed.reasoning ==
          "draw " + std::to_string(i));
    CHECK(set.candidates[static_cast<size_t>(i)].parsed.valid);
  }

  SamplingParams bad = params;
  bad.temperature = -1.0;
  CHECK_THROWS_AS(sample_candidates(inst, backend, lib, bad), Error);
}

TEST_CASE("alternating corruption pairs every instance") {
  const TemplateLibrary lib;
  OracleBackend oracle({50, CorruptionAxis::per_sample});
  std::vector<Instance> instances;
  for (int i = 0; i < 6; ++i)
    instances.push_back(th::make_instance("dp" + std::to_string(i),
                                          i % 2 ? Label::False : Label::True, "ooppppr"));
  DpoOptions opts;
  opts.params.n_samples = 4;
  const DpoDataset ds = build_dpo_dataset(instances, oracle, lib, opts);
  CHECK(ds.stats.pairs == 6);
  CHECK(ds.stats.skipped_no_correct == 0);
  CHECK(ds.stats.skipped_no_incorrect == 0);
  CHECK(ds.skips.empty());
  REQUIRE(ds.pairs.size() == 6);
  for (size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto& pair = ds.pairs[i];
    CHECK(pair.instance_id == instances[i].id);  // input order
    // sample 0 (ordinal 1) is clean, sample 1 (ordinal 2) corrupted
    CHECK(pair.chosen_label == instances[i].label);
    CHECK(pair.rejected_label == corrupt_label(instances[i].label));
    CHECK(parse_verdict(pair.chosen).valid);
    CHECK(parse_verdict(pair.rejected).valid);
  }
}

TEST_CASE("a clean oracle leaves every instance unpaired") {
  const TemplateLibrary lib;
  OracleBackend oracle;
  std::vector<Instance> instances{th::make_instance("c0", Label::True, "opr"),
                                  th::make_instance("c1", Label::Neutral, "opr")};
  DpoOptions opts;
  opts.params.n_samples = 2;
  const DpoDataset ds = build_dpo_dataset(instances, oracle, lib, opts);
  CHECK(ds.pairs.empty());
  CHECK(ds.stats.pairs == 0);
  CHECK(ds.stats.skipped_no_correct == 0);
  CHECK(ds.stats.skipped_no_incorrect == 2);
  REQUIRE(ds.skips.size() == 2);
  CHECK(ds.skips[0].instance_id == "c0");
  CHECK(ds.skips[1].instance_id == "c1");
  for (const auto& s : ds.skips) CHECK(s.reason == SkipReason::no_incorrect);
}

TEST_CASE("pairs and skips partition the input") {
  const TemplateLibrary lib;
  // 25% corruption: ordinals 1..4 -> only ordinal 4 corrupted, so n=2 never
  // sees a wrong sample while n=4 does.
  OracleBackend oracle({25, CorruptionAxis::per_sample});
  std::vector<Instance> instances;
  for (int i = 0; i < 5; ++i)
    instances.push_back(th::make_instance("mix" + std::to_string(i), Label::True, "opr"));

  DpoOptions two;
  two.params.n_samples = 2;
  const DpoDataset d2 = build_dpo_dataset(instances, oracle, lib, two);
  CHECK(d2.pairs.size() + d2.skips.size() == instances.size());
  CHECK(d2.stats.pairs == 0);
  CHECK(d2.stats.skipped_no_incorrect == 5);

  DpoOptions four;
  four.params.n_samples = 4;
  const DpoDataset d4 = build_dpo_dataset(instances, oracle, lib, four);
  CHECK(d4.pairs.size() + d4.skips.size() == instances.size());
  CHECK(d4.stats.pairs == 5);
  for (const auto& pair : d4.pairs) CHECK(pair.rejected_label == Label::False);
}
