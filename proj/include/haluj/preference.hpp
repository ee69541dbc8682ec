#pragma once

#include <optional>
#include <string>
#include <vector>

#include "haluj/core.hpp"
#include "haluj/detector.hpp"
#include "haluj/gateway.hpp"
#include "haluj/templates.hpp"

namespace haluj {

// ---------------------------------------------------------------------------
// Candidate sampling
// ---------------------------------------------------------------------------

struct Candidate {
  std::string raw;
  ParsedResponse parsed;
};

struct SampleSet {
  std::string instance_id;
  std::string prompt;
  Label gold = Label::True;
  std::vector<Candidate> candidates;  // sample_index order
};

/// Draw n candidates for one instance at sampling temperature. Candidates
/// keep their draw order; that order decides pair selection.
inline SampleSet sample_candidates(const Instance& inst, Backend& backend,
                                   const TemplateLibrary& lib, const SamplingParams& params) {
  validate_sampling(params);
  const PromptBuild build = build_detection_prompt(lib, inst, PromptMode::formatted);
  CompletionRequest req;
  req.prompt = build.prompt;
  req.params = params;
  req.sample_index = 0;
  req.meta = detection_meta(inst, build, "detect");

  SampleSet set;
  set.instance_id = inst.id;
  set.prompt = build.prompt;
  set.gold = inst.label;
  const std::vector<std::string> raws = backend.complete_n(req, params.n_samples);
  for (const auto& raw : raws) set.candidates.push_back({raw, parse_verdict(raw)});
  return set;
}

// ---------------------------------------------------------------------------
// Pair selection
// ---------------------------------------------------------------------------

enum class SkipReason { no_correct, no_incorrect };

inline const char* skip_reason_name(SkipReason r) {
  return r == SkipReason::no_correct ? "no_correct" : "no_incorrect";
}

struct SkipRecord {
  std::string instance_id;
  SkipReason reason = SkipReason::no_correct;
};

inline void to_json(json& j, const SkipRecord& s) {
  j = json{{"instance_id", s.instance_id}, {"reason", skip_reason_name(s.reason)}};
}

struct PairSelection {
  std::optional<PreferencePair> pair;
  std::optional<SkipReason> skip;
};

/// First-in-order pairing: chosen is the earliest valid candidate matching
/// gold; rejected is the earliest valid candidate with a different label,
/// falling back to the earliest invalid candidate only when no valid-wrong
/// one exists. No chosen => skip no_correct; no rejected => no_incorrect.
inline PairSelection select_pair(const SampleSet& set) {
  const Candidate* chosen = nullptr;
  const Candidate* valid_wrong = nullptr;
  const Candidate* invalid = nullptr;
  for (const auto& cand : set.candidates) {
    if (cand.parsed.valid) {
      if (cand.parsed.factuality == set.gold) {
        if (!chosen) chosen = &cand;
      } else if (!valid_wrong) {
        valid_wrong = &cand;
      }
    } else if (!invalid) {
      invalid = &cand;
    }
  }
  PairSelection out;
  if (!chosen) {
    out.skip = SkipReason::no_correct;
    return out;
  }
  const Candidate* rejected = valid_wrong ? valid_wrong : invalid;
  if (!rejected) {
    out.skip = SkipReason::no_incorrect;
    return out;
  }
  PreferencePair pair;
  pair.instance_id = set.instance_id;
  pair.prompt = set.prompt;
  pair.chosen = chosen->raw;
  pair.rejected = rejected->raw;
  pair.chosen_label = chosen->parsed.factuality;
  pair.rejected_label = rejected->parsed.factuality;
  out.pair = std::move(pair);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset construction
// ---------------------------------------------------------------------------

struct DpoStats {
  size_t pairs = 0;
  size_t skipped_no_correct = 0;
  size_t skipped_no_incorrect = 0;
};

inline void to_json(json& j, const DpoStats& s) {
  j = json{{"pairs", s.pairs},
           {"skipped_no_correct", s.skipped_no_correct},
           {"skipped_no_incorrect", s.skipped_no_incorrect}};
}

struct DpoDataset {
  std::vector<PreferencePair> pairs;
  std::vector<SkipRecord> skips;
  DpoStats stats;
};

struct DpoOptions {
  SamplingParams params = SamplingParams::preference_defaults();
  int concurrency_limit = 4;
};

/// Sample and pair every instance. Outputs keep input order; every instance
/// lands in exactly one of pairs/skips.
inline DpoDataset build_dpo_dataset(const std::vector<Instance>& instances, Backend& backend,
                                    const TemplateLibrary& lib, const DpoOptions& opts) {
  const size_t n = instances.size();
  std::vector<PairSelection> selections(n);
  parallel_for(n, opts.concurrency_limit, [&](size_t i) {
    selections[i] = select_pair(sample_candidates(instances[i], backend, lib, opts.params));
  });
  DpoDataset out;
  for (size_t i = 0; i < n; ++i) {
    PairSelection& sel = selections[i];
    if (sel.pair) {
      out.pairs.push_back(std::move(*sel.pair));
      ++out.stats.pairs;
    } else {
      out.skips.push_back({instances[i].id, *sel.skip});
      if (*sel.skip == SkipReason::no_correct) ++out.stats.skipped_no_correct;
      else ++out.stats.skipped_no_incorrect;
    }
  }
  return out;
}

}  // namespace haluj
