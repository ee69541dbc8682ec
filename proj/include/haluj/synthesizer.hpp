#pragma once

#include <algorithm>
#include <cmath>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "haluj/core.hpp"
#include "haluj/detector.hpp"
#include "haluj/gateway.hpp"
#include "haluj/parsing.hpp"
#include "haluj/rng.hpp"
#include "haluj/templates.hpp"

namespace haluj {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// One upstream record: a claim, its gold label, and the single original
/// evidence text.
struct SourceRecord {
  std::string id;
  std::string claim;
  Label label = Label::True;
  std::string evidence_text;
};

inline void to_json(json& j, const SourceRecord& s) {
  j = json{{"id", s.id}, {"claim", s.claim}, {"label", s.label}, {"evidence", s.evidence_text}};
}
inline void from_json(const json& j, SourceRecord& s) {
  j.at("id").get_to(s.id);
  j.at("claim").get_to(s.claim);
  j.at("label").get_to(s.label);
  j.at("evidence").get_to(s.evidence_text);
  if (!is_gold_label(s.label))
    throw Error(Errc::invalid_argument, "source " + s.id + ": label must be a gold label");
}

struct MisleadCandidate {
  std::string text;
  std::string explanation;
  bool passed_filter = false;
};

struct SftRecord {
  std::string prompt;
  std::string response;
  std::string split = "sft";  // sft | dpo_pool
  std::string instance_id;
};

inline void to_json(json& j, const SftRecord& r) {
  j = json{{"prompt", r.prompt}, {"response", r.response}, {"split", r.split},
           {"instance_id", r.instance_id}};
}
inline void from_json(const json& j, SftRecord& r) {
  j.at("prompt").get_to(r.prompt);
  j.at("response").get_to(r.response);
  j.at("split").get_to(r.split);
  j.at("instance_id").get_to(r.instance_id);
}

/// One backend interaction: which template drove it, how many attempts it
/// took, and how it ended.
struct AuditEntry {
  std::string instance_id;
  std::string template_id;
  int attempts = 0;
  std::string outcome;
};

inline void to_json(json& j, const AuditEntry& a) {
  j = json{{"instance_id", a.instance_id}, {"template", a.template_id},
           {"attempts", a.attempts}, {"outcome", a.outcome}};
}
inline void from_json(const json& j, AuditEntry& a) {
  j.at("instance_id").get_to(a.instance_id);
  j.at("template").get_to(a.template_id);
  j.at("attempts").get_to(a.attempts);
  j.at("outcome").get_to(a.outcome);
}

/// Irrelevance-screen rejection written for human review.
struct ReviewEntry {
  std::string source_id;
  std::string candidate_id;
  std::string evidence_text;
  std::vector<std::string> overlap_tokens;
};

inline void to_json(json& j, const ReviewEntry& r) {
  j = json{{"source_id", r.source_id}, {"candidate_id", r.candidate_id},
           {"evidence_text", r.evidence_text}, {"overlap_tokens", r.overlap_tokens}};
}

// ---------------------------------------------------------------------------
// Subject-overlap screen
// ---------------------------------------------------------------------------

namespace detail {

inline const std::set<std::string>& title_stopwords() {
  static const std::set<std::string> words{
      "A",    "An",   "And",  "As",    "At",   "But", "By",   "For",  "From", "He",
      "Her",  "His",  "I",    "If",    "In",   "It",  "Its",  "Nor",  "Of",   "On",
      "Or",   "She",  "So",   "That",  "The",  "They", "This", "To",   "We",   "When",
      "Where", "Which", "Who", "While", "With", "You"};
  return words;
}

/// Capitalized alphabetic tokens minus function words; a cheap stand-in for
/// the subjects named in a text.
inline std::set<std::string> subject_tokens(std::string_view text) {
  std::set<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    if (!std::isalpha(static_cast<unsigned char>(text[i]))) { ++i; continue; }
    size_t j = i;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    std::string word(text.substr(i, j - i));
    if (std::isupper(static_cast<unsigned char>(word[0])) && !title_stopwords().count(word))
      out.insert(std::move(word));
    i = j;
  }
  return out;
}

}  // namespace detail

/// Title-cased non-stopword tokens shared between a candidate evidence text
/// and a claim; nonempty means the candidate is not safely irrelevant.
inline std::vector<std::string> subject_overlap(std::string_view claim,
                                                std::string_view candidate) {
  const auto a = detail::subject_tokens(claim);
  const auto b = detail::subject_tokens(candidate);
  std::vector<std::string> overlap;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(overlap));
  return overlap;
}

/// Draw k evidence texts from other records, seeded-uniformly, rejecting any
/// candidate whose subjects overlap the target claim. Rejections become
/// review entries.
inline std::vector<std::string> sample_completely_irrelevant(
    const std::vector<SourceRecord>& pool, const SourceRecord& target, size_t k,
    std::uint64_t seed, std::vector<ReviewEntry>* review = nullptr) {
  std::vector<const SourceRecord*> others;
  for (const auto& rec : pool)
    if (rec.id != target.id) others.push_back(&rec);
  std::mt19937_64 gen(seed);
  std::vector<size_t> order = rng::shuffle_permutation(others.size(), gen);
  std::vector<std::string> picked;
  for (size_t idx : order) {
    if (picked.size() == k) break;
    const SourceRecord& cand = *others[idx];
    auto overlap = subject_overlap(target.claim, cand.evidence_text);
    if (overlap.empty()) {
      picked.push_back(cand.evidence_text);
    } else if (review) {
      review->push_back({target.id, cand.id, cand.evidence_text, std::move(overlap)});
    }
  }
  if (picked.size() < k)
    throw Error(Errc::pool_exhausted,
                "source " + target.id + ": only " + std::to_string(picked.size()) + " of " +
                    std::to_string(k) + " irrelevant candidates available");
  return picked;
}

// ---------------------------------------------------------------------------
// Generation steps
// ---------------------------------------------------------------------------

struct SynthesisOptions {
  int max_attempts = 3;
  int word_target = 150;
  bool neutral_misleads = false;  // render both opposite directions for Neutral sources
  double split_ratio = 1952.0 / 2661.0;
  SamplingParams params = SamplingParams::synthesis_defaults();
  int concurrency_limit = 4;
};

namespace detail {

inline CompletionRequest synth_request(std::string prompt, const SynthesisOptions& opts,
                                       RequestMeta meta, int attempt) {
  CompletionRequest req;
  req.prompt = std::move(prompt);
  req.params = opts.params;
  req.sample_index = attempt - 1;  // retries draw fresh samples
  req.meta = std::move(meta);
  return req;
}

}  // namespace detail

/// Four partially-irrelevant paragraphs for one source record.
inline std::vector<std::string> gen_partial_irrelevant(const SourceRecord& src, Backend& backend,
                                                       const TemplateLibrary& lib,
                                                       const SynthesisOptions& opts,
                                                       std::vector<AuditEntry>& audit) {
  const std::string prompt = lib.render(TemplateId::gen_partial_irrelevant,
                                        {{"claim", src.claim},
                                         {"evidence", src.evidence_text},
                                         {"label", label_word(src.label)}});
  RequestMeta meta;
  meta.task = "gen_partial";
  meta.instance_id = src.id;
  meta.claim = src.claim;
  meta.evidence_text = src.evidence_text;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    const std::string raw =
        backend.complete(detail::synth_request(prompt, opts, meta, attempt));
    const auto arr = parsing::parse_first_array(raw);
    if (arr && arr->is_array() && arr->size() == 4 &&
        std::all_of(arr->begin(), arr->end(), [](const json& v) { return v.is_string(); })) {
      audit.push_back({src.id, "gen_partial_irrelevant", attempt, "ok"});
      std::vector<std::string> out;
      for (const auto& v : *arr) out.push_back(v.get<std::string>());
      return out;
    }
  }
  audit.push_back({src.id, "gen_partial_irrelevant", opts.max_attempts, "malformed_list"});
  throw Error(Errc::malformed_list,
              "source " + src.id + ": no 4-element string list after " +
                  std::to_string(opts.max_attempts) + " attempts");
}

/// Expand a short paragraph toward the word target. Returns the input
/// unchanged when it already meets the floor (0.6 x target); otherwise takes
/// the first expansion inside [0.6, 1.8] x target, with one retry, and
/// falls back to whichever attempt (the original included) lands closest to
/// the target.
inline std::string expand_paragraph(const std::string& text, const SourceRecord& src,
                                    Backend& backend, const SynthesisOptions& opts,
                                    std::vector<AuditEntry>& audit) {
  const int floor_words = static_cast<int>(0.6 * opts.word_target);
  const int ceil_words = static_cast<int>(1.8 * opts.word_target);
  if (parsing::word_count(text) >= floor_words) return text;
  const std::string prompt =
      "Expand the following paragraph to approximately " + std::to_string(opts.word_target) +
      " words. Keep its subject and meaning unchanged, add only neutral supporting detail, and "
      "output the expanded paragraph directly.\n\n" + text;
  RequestMeta meta;
  meta.task = "expand";
  meta.instance_id = src.id;
  meta.evidence_text = text;
  std::vector<std::string> attempts{text};
  for (int attempt = 1; attempt <= 2; ++attempt) {
    std::string expanded = backend.complete(detail::synth_request(prompt, opts, meta, attempt));
    const int wc = parsing::word_count(expanded);
    if (wc >= floor_words && wc <= ceil_words) {
      audit.push_back({src.id, "expand", attempt, "ok"});
      return expanded;
    }
    attempts.push_back(std::move(expanded));
  }
  size_t best = 0;
  for (size_t i = 1; i < attempts.size(); ++i)
    if (std::abs(parsing::word_count(attempts[i]) - opts.word_target) <
        std::abs(parsing::word_count(attempts[best]) - opts.word_target))
      best = i;
  audit.push_back({src.id, "expand", 2, best == 0 ? "kept_original" : "kept_best_attempt"});
  return attempts[best];
}

/// Three misleading candidates pushing toward `opposite` (lowercase word).
inline std::vector<MisleadCandidate> gen_misleading(const SourceRecord& src,
                                                    const std::string& opposite,
                                                    Backend& backend, const TemplateLibrary& lib,
                                                    const SynthesisOptions& opts,
                                                    std::vector<AuditEntry>& audit) {
  const std::string prompt = lib.render(TemplateId::gen_misleading,
                                        {{"claim", src.claim},
                                         {"evidence", src.evidence_text},
                                         {"label", label_word(src.label)},
                                         {"opposite_label", opposite}});
  RequestMeta meta;
  meta.task = "gen_misleading";
  meta.instance_id = src.id;
  meta.claim = src.claim;
  meta.evidence_text = src.evidence_text;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    const std::string raw =
        backend.complete(detail::synth_request(prompt, opts, meta, attempt));
    const auto arr = parsing::parse_first_array(raw);
    const auto well_formed = [](const json& v) {
      return v.is_object() && v.contains("evidence") && v.at("evidence").is_string() &&
             v.contains("explanation") && v.at("explanation").is_string() &&
             !v.at("explanation").get<std::string>().empty();
    };
    if (arr && arr->is_array() && arr->size() == 3 &&
        std::all_of(arr->begin(), arr->end(), well_formed)) {
      audit.push_back({src.id, "gen_misleading", attempt, "ok"});
      std::vector<MisleadCandidate> out;
      for (const auto& v : *arr)
        out.push_back({v.at("evidence").get<std::string>(),
                       v.at("explanation").get<std::string>(), false});
      return out;
    }
  }
  audit.push_back({src.id, "gen_misleading", opts.max_attempts, "malformed_list"});
  throw Error(Errc::malformed_list,
              "source " + src.id + ": no 3-element candidate list after " +
                  std::to_string(opts.max_attempts) + " attempts");
}

/// Keep decision for one misleading candidate: classification True means the
/// candidate maintains the claim's correctness. Malformed responses drop the
/// candidate (conservative default).
inline bool filter_misleading(const SourceRecord& src, const MisleadCandidate& candidate,
                              Backend& backend, const TemplateLibrary& lib,
                              const SynthesisOptions& opts, std::vector<AuditEntry>& audit) {
  const std::string prompt = lib.render(TemplateId::filter_misleading,
                                        {{"claim", src.claim},
                                         {"label", label_word(src.label)},
                                         {"evidence", candidate.text}});
  RequestMeta meta;
  meta.task = "filter";
  meta.instance_id = src.id;
  meta.claim = src.claim;
  meta.evidence_text = candidate.text;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    const std::string raw =
        backend.complete(detail::synth_request(prompt, opts, meta, attempt));
    auto obj = parsing::parse_first_array(raw);
    if (obj && obj->is_array() && obj->size() == 1) obj = obj->at(0);
    if (!obj || !obj->is_object()) obj = parsing::parse_first_object(raw);
    if (obj && obj->is_object() && obj->contains("classification")) {
      const json& c = obj->at("classification");
      std::optional<bool> keep;
      if (c.is_boolean()) keep = c.get<bool>();
      else if (c.is_string()) {
        const Label l = normalize_label(c.get<std::string>());
        if (l == Label::True) keep = true;
        else if (l == Label::False) keep = false;
      }
      if (keep) {
        audit.push_back({src.id, "filter_misleading", attempt, *keep ? "keep" : "drop"});
        return *keep;
      }
    }
  }
  audit.push_back({src.id, "filter_misleading", opts.max_attempts, "drop_malformed"});
  return false;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Build the category-grouped instance: 2 completely-irrelevant, 4 partially-
/// irrelevant, then the original evidence followed by up to 2 kept misleads.
inline Instance assemble_instance(const SourceRecord& src,
                                  const std::vector<std::string>& irrelevant,
                                  const std::vector<std::string>& partial,
                                  const std::vector<MisleadCandidate>& kept_misleads) {
  if (irrelevant.size() != 2 || partial.size() != 4 || kept_misleads.size() > 2)
    throw Error(Errc::invalid_argument, "source " + src.id + ": bad component counts");
  Instance inst;
  inst.id = src.id;
  inst.claim = src.claim;
  inst.label = src.label;
  inst.source = Source::multi_evidence;
  auto push = [&](const std::string& text, EvidenceCategory cat) {
    EvidenceItem e;
    e.eid = static_cast<int>(inst.evidence.size()) + 1;
    e.text = text;
    e.category = cat;
    inst.evidence.push_back(std::move(e));
  };
  for (const auto& text : irrelevant) push(text, EvidenceCategory::CompletelyIrrelevant);
  for (const auto& text : partial) push(text, EvidenceCategory::PartiallyIrrelevant);
  push(src.evidence_text, EvidenceCategory::HighlyRelated);
  for (const auto& cand : kept_misleads) {
    push(cand.text, EvidenceCategory::HighlyRelated);
    inst.evidence.back().misleading = true;
    inst.evidence.back().explanation = cand.explanation;
  }
  validate_instance(inst);
  if (!composition_check(inst).ok)
    throw Error(Errc::invalid_argument, "source " + src.id + ": composition violated");
  return inst;
}

// ---------------------------------------------------------------------------
// Golden critique synthesis
// ---------------------------------------------------------------------------

/// The per-evidence key information the synthesis prompt reveals: category
/// of each piece, with the confusing point spelled out for misleads.
inline std::string build_additional_info(const Instance& inst) {
  std::ostringstream out;
  for (const auto& e : inst.evidence) {
    switch (e.category) {
      case EvidenceCategory::CompletelyIrrelevant:
        out << "Evidence " << e.eid << " is completely irrelevant to the claim.\n";
        break;
      case EvidenceCategory::PartiallyIrrelevant:
        out << "Evidence " << e.eid
            << " is partially irrelevant: it shares the claim's subject but does not bear on "
               "what the claim asserts.\n";
        break;
      case EvidenceCategory::HighlyRelated:
        if (e.misleading)
          out << "Evidence " << e.eid
              << " is highly related but written to confuse; the confusing point: "
              << *e.explanation << "\n";
        else
          out << "Evidence " << e.eid << " is highly related to the claim.\n";
        break;
      case EvidenceCategory::Unmentioned:
        break;
    }
  }
  return out.str();
}

inline RequestMeta instance_meta(const Instance& inst, std::string task) {
  RequestMeta meta;
  meta.task = std::move(task);
  meta.instance_id = inst.id;
  meta.gold = inst.label;
  for (const auto& e : inst.evidence) {
    meta.categories.push_back(e.category);
    meta.misleading.push_back(e.misleading);
  }
  meta.claim = inst.claim;
  return meta;
}

/// Golden reasoning with the gold label in-prompt. Completions whose parsed
/// factuality disagrees with the gold label are rejected and redrawn.
inline ParsedResponse synthesize_golden_reasoning(const Instance& inst, Backend& backend,
                                                  const TemplateLibrary& lib,
                                                  const SynthesisOptions& opts,
                                                  std::vector<AuditEntry>& audit,
                                                  const std::string& additional_info_override = "") {
  const std::string additional_info =
      additional_info_override.empty() ? build_additional_info(inst) : additional_info_override;
  const std::string prompt =
      lib.render(TemplateId::synth_golden,
                 {{"claim", inst.claim},
                  {"formatted_evidences", format_evidence_list(inst.evidence)},
                  {"additional_info", additional_info},
                  {"label", std::string(label_name(inst.label))}});
  const RequestMeta meta = instance_meta(inst, "synth_golden");
  bool saw_mismatch = false;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    const std::string raw =
        backend.complete(detail::synth_request(prompt, opts, meta, attempt));
    const ParsedResponse parsed = parse_verdict(raw);
    if (!parsed.valid) continue;
    if (parsed.factuality != inst.label) {
      saw_mismatch = true;
      continue;
    }
    audit.push_back({inst.id, "synth_golden", attempt, "ok"});
    return parsed;
  }
  const char* outcome = saw_mismatch ? "label_mismatch" : "malformed_response";
  audit.push_back({inst.id, "synth_golden", opts.max_attempts, outcome});
  throw Error(saw_mismatch ? Errc::label_mismatch : Errc::malformed_response,
              "instance " + inst.id + ": golden synthesis failed after " +
                  std::to_string(opts.max_attempts) + " attempts (" + outcome + ")");
}

/// Section an eid's gold category maps to.
inline Section category_section(EvidenceCategory c) {
  switch (c) {
    case EvidenceCategory::CompletelyIrrelevant: return Section::CompletelyIrrelevant;
    case EvidenceCategory::PartiallyIrrelevant:  return Section::PartiallyIrrelevant;
    case EvidenceCategory::HighlyRelated:        return Section::HighlyRelated;
    case EvidenceCategory::Unmentioned:          return Section::Conclusion;
  }
  return Section::Conclusion;
}

/// Every analyzed eid sits in the section its gold category names.
inline bool analyses_match_gold(const SectionedCritique& sc, const Instance& inst) {
  for (const auto& [eid, sec] : sc.analyses) {
    if (eid < 1 || eid > static_cast<int>(inst.evidence.size())) return false;
    if (sec == Section::Conclusion) return false;
    if (category_section(inst.evidence[static_cast<size_t>(eid) - 1].category) != sec)
      return false;
  }
  return true;
}

/// Reformat a golden reasoning into the four-section critique. Requires all
/// four headers and analyses consistent with the instance's gold categories.
inline std::string reformat_golden(const Instance& inst, const std::string& reasoning_text,
                                   Backend& backend, const TemplateLibrary& lib,
                                   const SynthesisOptions& opts,
                                   std::vector<AuditEntry>& audit) {
  if (reasoning_text.empty())
    throw Error(Errc::invalid_argument, "instance " + inst.id + ": empty reasoning");
  const std::string prompt = lib.render(TemplateId::reformat_golden,
                                        {{"claim", inst.claim},
                                         {"evidence", format_evidence_list(inst.evidence)},
                                         {"critique", reasoning_text}});
  const RequestMeta meta = instance_meta(inst, "reformat_golden");
  bool saw_mismatch = false;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    const std::string critique =
        backend.complete(detail::synth_request(prompt, opts, meta, attempt));
    if (!critique_has_all_sections(critique)) continue;
    const SectionedCritique sc = parse_critique_sections(critique, inst);
    if (!analyses_match_gold(sc, inst)) {
      saw_mismatch = true;
      continue;
    }
    audit.push_back({inst.id, "reformat_golden", attempt, "ok"});
    return critique;
  }
  const char* outcome = saw_mismatch ? "analysis_mismatch" : "missing_sections";
  audit.push_back({inst.id, "reformat_golden", opts.max_attempts, outcome});
  throw Error(Errc::missing_sections,
              "instance " + inst.id + ": reformat failed after " +
                  std::to_string(opts.max_attempts) + " attempts (" + outcome + ")");
}

// ---------------------------------------------------------------------------
// SFT emission
// ---------------------------------------------------------------------------

/// Canonical stored response: the critique under "reasoning" plus the gold
/// label, dumped as one JSON object.
inline std::string make_sft_response(const std::string& critique, Label gold) {
  return json{{"factuality", std::string(label_name(gold))}, {"reasoning", critique}}.dump();
}

struct SftEmission {
  std::vector<SftRecord> sft;
  std::vector<Instance> dpo_pool;
};

/// Split instances by ratio (seeded), then give every SFT-side instance a
/// shuffled-evidence prompt and a golden critique rewritten to the
/// presentation numbering. DPO-side instances pass through untouched.
inline SftEmission emit_sft_records(const std::vector<Instance>& instances, Backend& backend,
                                    const TemplateLibrary& lib, std::uint64_t base_seed,
                                    const SynthesisOptions& opts,
                                    std::vector<AuditEntry>& audit) {
  const size_t n = instances.size();
  size_t n_sft = static_cast<size_t>(std::llround(opts.split_ratio * static_cast<double>(n)));
  n_sft = std::min(n_sft, n);
  std::mt19937_64 split_gen(rng::derive_seed(base_seed, "split"));
  const std::vector<size_t> perm = rng::shuffle_permutation(n, split_gen);
  std::vector<bool> in_sft(n, false);
  for (size_t i = 0; i < n_sft; ++i) in_sft[perm[i]] = true;

  SftEmission out;
  std::vector<size_t> sft_indices;
  for (size_t i = 0; i < n; ++i) {
    if (in_sft[i]) sft_indices.push_back(i);
    else out.dpo_pool.push_back(instances[i]);
  }

  std::vector<SftRecord> records(sft_indices.size());
  std::vector<std::vector<AuditEntry>> audits(sft_indices.size());
  parallel_for(sft_indices.size(), opts.concurrency_limit, [&](size_t slot) {
    const Instance& inst = instances[sft_indices[slot]];
    const ParsedResponse golden =
        synthesize_golden_reasoning(inst, backend, lib, opts, audits[slot]);
    const std::string critique =
        reformat_golden(inst, golden.reasoning, backend, lib, opts, audits[slot]);

    const std::uint64_t shuffle_seed = rng::derive_seed(base_seed, "sft_shuffle", inst.id);
    const std::vector<EvidenceItem> arranged = shuffle_evidence(inst.evidence, shuffle_seed);
    const std::vector<int> presentation = presentation_of(arranged);
    const Instance presented = apply_presentation(inst, presentation);
    std::map<int, int> renumbering;  // stored eid -> presented position
    for (size_t k = 0; k < presentation.size(); ++k)
      renumbering[presentation[k]] = static_cast<int>(k) + 1;
    const std::string rewritten = rewrite_evidence_mentions(critique, renumbering);

    SftRecord rec;
    rec.instance_id = inst.id;
    rec.split = "sft";
    rec.prompt = lib.render(TemplateId::detection_formatted,
                            {{"claim", inst.claim},
                             {"evidences", format_evidence_list(presented.evidence)}});
    rec.response = make_sft_response(rewritten, inst.label);
    records[slot] = std::move(rec);
  });
  for (size_t slot = 0; slot < records.size(); ++slot) {
    out.sft.push_back(std::move(records[slot]));
    for (auto& a : audits[slot]) audit.push_back(std::move(a));
  }
  return out;
}

/// One-shot golden critique for a single-evidence source: no reformat stage,
/// no shuffle, same label-match enforcement.
inline SftRecord synthesize_single_evidence_critique(const SourceRecord& src, Backend& backend,
                                                     const TemplateLibrary& lib,
                                                     const SynthesisOptions& opts,
                                                     std::vector<AuditEntry>& audit) {
  Instance inst;
  inst.id = src.id;
  inst.claim = src.claim;
  inst.label = src.label;
  inst.source = Source::single_evidence;
  EvidenceItem e;
  e.eid = 1;
  e.text = src.evidence_text;
  e.category = EvidenceCategory::HighlyRelated;
  inst.evidence.push_back(std::move(e));
  validate_instance(inst);

  const std::string additional_info =
      "Evidence 1 is the original record for the claim and is highly related to it.\n";
  const ParsedResponse golden =
      synthesize_golden_reasoning(inst, backend, lib, opts, audit, additional_info);
  SftRecord rec;
  rec.instance_id = inst.id;
  rec.split = "sft";
  rec.prompt = lib.render(TemplateId::detection_formatted,
                          {{"claim", inst.claim},
                           {"evidences", format_evidence_list(inst.evidence)}});
  rec.response = make_sft_response(golden.reasoning, inst.label);
  return rec;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

struct SynthesisStats {
  size_t instances = 0;
  size_t failed_sources = 0;
  long n_o = 0, n_p = 0, n_r = 0;
  size_t misleads_kept = 0, misleads_dropped_filter = 0, misleads_dropped_cap = 0;
  size_t neutral_skipped_misleads = 0;
  size_t golden_redraws = 0;  // synth_golden attempts discarded (label mismatch or malformed)
  size_t sft_records = 0, dpo_pool = 0;
};

inline void to_json(json& j, const SynthesisStats& s) {
  j = json{{"instances", s.instances},
           {"failed_sources", s.failed_sources},
           {"n_o", s.n_o},
           {"n_p", s.n_p},
           {"n_r", s.n_r},
           {"misleads_kept", s.misleads_kept},
           {"misleads_dropped_filter", s.misleads_dropped_filter},
           {"misleads_dropped_cap", s.misleads_dropped_cap},
           {"neutral_skipped_misleads", s.neutral_skipped_misleads},
           {"golden_redraws", s.golden_redraws},
           {"sft_records", s.sft_records},
           {"dpo_pool", s.dpo_pool}};
}

struct SynthesisOutput {
  std::vector<Instance> instances;
  std::vector<SftRecord> sft;
  std::vector<Instance> dpo_pool;
  std::vector<AuditEntry> audit;
  std::vector<ReviewEntry> review;
  SynthesisStats stats;
};

/// End-to-end curation for one source: irrelevant sampling, partial
/// generation (+expansion), misleading generation and filtering, assembly.
inline Instance synthesize_instance(const std::vector<SourceRecord>& sources,
                                    const SourceRecord& src, Backend& backend,
                                    const TemplateLibrary& lib, std::uint64_t seed,
                                    const SynthesisOptions& opts,
                                    std::vector<AuditEntry>& audit,
                                    std::vector<ReviewEntry>& review, SynthesisStats& stats) {
  const auto irrelevant = sample_completely_irrelevant(
      sources, src, 2, rng::derive_seed(seed, "irrelevant", src.id), &review);

  std::vector<std::string> partial = gen_partial_irrelevant(src, backend, lib, opts, audit);
  for (auto& p : partial) p = expand_paragraph(p, src, backend, opts, audit);

  std::vector<MisleadCandidate> candidates;
  if (src.label == Label::Neutral && !opts.neutral_misleads) {
    ++stats.neutral_skipped_misleads;
  } else if (src.label == Label::Neutral) {
    for (const char* dir : {"true", "false"}) {
      auto pool = gen_misleading(src, dir, backend, lib, opts, audit);
      candidates.insert(candidates.end(), pool.begin(), pool.end());
    }
  } else {
    candidates = gen_misleading(src, opposite_label_word(src.label), backend, lib, opts, audit);
  }

  std::vector<MisleadCandidate> kept;
  for (auto& cand : candidates) {
    cand.passed_filter = filter_misleading(src, cand, backend, lib, opts, audit);
    if (!cand.passed_filter) {
      ++stats.misleads_dropped_filter;
    } else if (kept.size() < 2) {
      kept.push_back(cand);
      ++stats.misleads_kept;
    } else {
      ++stats.misleads_dropped_cap;
      audit.push_back({src.id, "filter_misleading", 0, "dropped_cap"});
    }
  }
  return assemble_instance(src, irrelevant, partial, kept);
}

/// The synthesize command's engine: per-source curation (failures recorded,
/// batch continues), then SFT/DPO emission over the assembled instances.
inline SynthesisOutput run_synthesis(const std::vector<SourceRecord>& sources, Backend& backend,
                                     const TemplateLibrary& lib, std::uint64_t seed,
                                     const SynthesisOptions& opts) {
  SynthesisOutput out;
  const size_t n = sources.size();
  std::vector<std::optional<Instance>> slots(n);
  std::vector<std::vector<AuditEntry>> audits(n);
  std::vector<std::vector<ReviewEntry>> reviews(n);
  std::vector<SynthesisStats> stats(n);
  parallel_for(n, opts.concurrency_limit, [&](size_t i) {
    try {
      slots[i] = synthesize_instance(sources, sources[i], backend, lib, seed, opts, audits[i],
                                     reviews[i], stats[i]);
    } catch (const Error& e) {
      audits[i].push_back({sources[i].id, "synthesize", 0,
                           std::string("failed: ") + std::string(errc_name(e.code()))});
      ++stats[i].failed_sources;
    }
  });
  for (size_t i = 0; i < n; ++i) {
    for (auto& a : audits[i]) out.audit.push_back(std::move(a));
    for (auto& r : reviews[i]) out.review.push_back(std::move(r));
    out.stats.failed_sources += stats[i].failed_sources;
    out.stats.misleads_kept += stats[i].misleads_kept;
    out.stats.misleads_dropped_filter += stats[i].misleads_dropped_filter;
    out.stats.misleads_dropped_cap += stats[i].misleads_dropped_cap;
    out.stats.neutral_skipped_misleads += stats[i].neutral_skipped_misleads;
    if (slots[i]) {
      const auto rep = composition_check(*slots[i]);
      out.stats.n_o += rep.n_o;
      out.stats.n_p += rep.n_p;
      out.stats.n_r += rep.n_r;
      out.instances.push_back(std::move(*slots[i]));
    }
  }
  out.stats.instances = out.instances.size();

  std::vector<AuditEntry> emit_audit;
  SftEmission emission = emit_sft_records(out.instances, backend, lib, seed, opts, emit_audit);
  for (auto& a : emit_audit) {
    if (a.template_id == "synth_golden")
      out.stats.golden_redraws +=
          static_cast<size_t>(a.outcome == "ok" ? a.attempts - 1 : a.attempts);
    out.audit.push_back(std::move(a));
  }
  out.sft = std::move(emission.sft);
  out.dpo_pool = std::move(emission.dpo_pool);
  out.stats.sft_records = out.sft.size();
  out.stats.dpo_pool = out.dpo_pool.size();
  return out;
}

}  // namespace haluj
