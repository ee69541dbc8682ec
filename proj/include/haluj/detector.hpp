#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "haluj/core.hpp"
#include "haluj/gateway.hpp"
#include "haluj/parsing.hpp"
#include "haluj/rng.hpp"
#include "haluj/templates.hpp"

namespace haluj {

// ---------------------------------------------------------------------------
// Evidence ordering
// ---------------------------------------------------------------------------

/// Stable three-way partition by category rank o < p < r. Keeps original
/// eids; callers renumber positionally afterward. Idempotent.
inline std::vector<EvidenceItem> reorder_evidence(const std::vector<EvidenceItem>& items) {
  for (const auto& e : items)
    if (e.category == EvidenceCategory::Unmentioned)
      throw Error(Errc::invalid_argument, "reorder_evidence: gold category required");
  std::vector<EvidenceItem> out;
  out.reserve(items.size());
  for (int rank = 0; rank <= 2; ++rank)
    for (const auto& e : items)
      if (category_rank(e.category) == rank) out.push_back(e);
  return out;
}

/// Seeded uniform permutation; same seed, same order. Keeps original eids.
inline std::vector<EvidenceItem> shuffle_evidence(const std::vector<EvidenceItem>& items,
                                                  std::uint64_t seed) {
  std::vector<EvidenceItem> out = items;
  std::mt19937_64 gen(seed);
  rng::shuffle(out, gen);
  return out;
}

/// Original eids of `items` in their current order: presentation[k] is the
/// stored eid shown at position k+1.
inline std::vector<int> presentation_of(const std::vector<EvidenceItem>& items) {
  std::vector<int> pres;
  pres.reserve(items.size());
  for (const auto& e : items) pres.push_back(e.eid);
  return pres;
}

/// Renumber eids 1..n in the items' current order.
inline std::vector<EvidenceItem> renumber_evidence(std::vector<EvidenceItem> items) {
  for (size_t i = 0; i < items.size(); ++i) items[i].eid = static_cast<int>(i) + 1;
  return items;
}

/// The instance as a reader of the prompt sees it: evidence permuted to
/// `presentation` order and renumbered 1..n, categories carried along.
inline Instance apply_presentation(const Instance& inst, const std::vector<int>& presentation) {
  if (presentation.size() != inst.evidence.size())
    throw Error(Errc::invalid_argument, "presentation size mismatch for " + inst.id);
  Instance out = inst;
  out.evidence.clear();
  for (int eid : presentation) {
    if (eid < 1 || eid > static_cast<int>(inst.evidence.size()))
      throw Error(Errc::invalid_argument, "presentation eid out of range for " + inst.id);
    out.evidence.push_back(inst.evidence[static_cast<size_t>(eid) - 1]);
  }
  out.evidence = renumber_evidence(std::move(out.evidence));
  return out;
}

// ---------------------------------------------------------------------------
// Detection prompts
// ---------------------------------------------------------------------------

enum class PromptMode { formatted, plain };
enum class EvidenceOrder { as_stored, shuffled };

inline std::string_view prompt_mode_name(PromptMode m) {
  return m == PromptMode::formatted ? "formatted" : "plain";
}

struct PromptBuild {
  std::string prompt;
  std::vector<int> presentation;   // stored eids in presented order
  Instance presented;              // evidence renumbered to presentation order
};

/// Render the detection prompt for one instance. Shuffled order draws its
/// permutation from `seed` alone, so equal seeds rebuild equal prompts.
inline PromptBuild build_detection_prompt(const TemplateLibrary& lib, const Instance& inst,
                                          PromptMode mode,
                                          EvidenceOrder order = EvidenceOrder::as_stored,
                                          std::uint64_t seed = 0) {
  if (inst.evidence.empty())
    throw Error(Errc::invalid_argument, "instance " + inst.id + " has no evidence");
  PromptBuild out;
  const std::vector<EvidenceItem> arranged =
      order == EvidenceOrder::shuffled ? shuffle_evidence(inst.evidence, seed) : inst.evidence;
  out.presentation = presentation_of(arranged);
  out.presented = apply_presentation(inst, out.presentation);
  const TemplateId tid = mode == PromptMode::formatted ? TemplateId::detection_formatted
                                                       : TemplateId::detection_plain;
  out.prompt = lib.render(tid, {{"claim", inst.claim},
                                {"evidences", format_evidence_list(out.presented.evidence)}});
  return out;
}

// ---------------------------------------------------------------------------
// Verdict parsing
// ---------------------------------------------------------------------------

/// Total parse of a raw completion into the {reasoning, factuality} contract.
/// Valid responses carry a string reasoning and a factuality that normalizes
/// to a gold label (booleans allowed); everything else comes back invalid
/// with factuality Invalid and empty reasoning.
inline ParsedResponse parse_verdict(const std::string& raw) {
  ParsedResponse out;
  out.raw = raw;
  const auto obj = parsing::parse_first_object(raw);
  if (!obj || !obj->is_object()) return out;
  if (!obj->contains("reasoning") || !obj->contains("factuality")) return out;
  const json& reasoning = obj->at("reasoning");
  const json& factuality = obj->at("factuality");
  if (!reasoning.is_string()) return out;
  Label label = Label::Invalid;
  if (factuality.is_string()) label = normalize_label(factuality.get<std::string>());
  else if (factuality.is_boolean()) label = factuality.get<bool>() ? Label::True : Label::False;
  if (label == Label::Invalid) return out;
  out.reasoning = reasoning.get<std::string>();
  out.factuality = label;
  out.valid = true;
  return out;
}

// ---------------------------------------------------------------------------
// Critique sectioning
// ---------------------------------------------------------------------------

namespace detail {

inline const std::vector<std::string>& section_markers(Section s) {
  static const std::vector<std::string> ci{"[Completely Irrelevant Evidence]"};
  // Both spellings occur in the wild; accept either.
  static const std::vector<std::string> pi{"[Partial Irrelevant Evidence]",
                                           "[Partially Irrelevant Evidence]"};
  static const std::vector<std::string> hr{"[Highly related Evidence]",
                                           "[Highly Related Evidence]"};
  static const std::vector<std::string> co{"[Conclusion]"};
  switch (s) {
    case Section::CompletelyIrrelevant: return ci;
    case Section::PartiallyIrrelevant:  return pi;
    case Section::HighlyRelated:        return hr;
    case Section::Conclusion:           return co;
  }
  return co;
}

inline bool mention_word_char(char c) {
  return c == '_' || std::isalnum(static_cast<unsigned char>(c));
}

}  // namespace detail

/// One "Evidence N" style integer reference: the span of the integer token
/// within the scanned text plus its value.
struct MentionToken {
  size_t begin = 0;
  size_t end = 0;
  int value = 0;
};

/// Scan for evidence references: the word "Evidence" (or "Evidences",
/// case-sensitive) followed by an integer enumeration ("3", "3 and 7",
/// "2, 4, 5, and 6", "1 & 2"). Returns every integer token in order.
inline std::vector<MentionToken> scan_evidence_mentions(std::string_view text) {
  std::vector<MentionToken> tokens;
  size_t pos = 0;
  while ((pos = text.find("Evidence", pos)) != std::string_view::npos) {
    const size_t word_begin = pos;
    if (word_begin > 0 && detail::mention_word_char(text[word_begin - 1])) {
      pos += 8;
      continue;
    }
    size_t i = pos + 8;
    if (i < text.size() && text[i] == 's') ++i;
    if (i < text.size() && detail::mention_word_char(text[i])) {
      pos += 8;
      continue;
    }
    auto skip_spaces = [&](size_t k) {
      while (k < text.size() && (text[k] == ' ' || text[k] == '\t')) ++k;
      return k;
    };
    auto parse_int = [&](size_t k) -> std::optional<MentionToken> {
      const size_t begin = k;
      while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
      if (k == begin) return std::nullopt;
      if (k < text.size() && detail::mention_word_char(text[k])) return std::nullopt;
      return MentionToken{begin, k, std::stoi(std::string(text.substr(begin, k - begin)))};
    };
    size_t cursor = skip_spaces(i);
    auto first = parse_int(cursor);
    if (!first) {
      pos += 8;
      continue;
    }
    tokens.push_back(*first);
    cursor = first->end;
    for (;;) {
      size_t k = skip_spaces(cursor);
      if (k < text.size() && text[k] == ',') k = skip_spaces(k + 1);
      if (k + 3 <= text.size() && text.compare(k, 3, "and") == 0 &&
          (k + 3 == text.size() || !detail::mention_word_char(text[k + 3])))
        k = skip_spaces(k + 3);
      else if (k < text.size() && text[k] == '&')
        k = skip_spaces(k + 1);
      auto next = parse_int(k);
      if (!next) break;  // separators not followed by an integer stay untouched
      tokens.push_back(*next);
      cursor = next->end;
    }
    pos = cursor;
  }
  return tokens;
}

/// Rewrite every in-map evidence reference to its new number. Spans come
/// from scan_evidence_mentions, so enumerations are rewritten element-wise.
inline std::string rewrite_evidence_mentions(const std::string& text,
                                             const std::map<int, int>& renumbering) {
  const auto tokens = scan_evidence_mentions(text);
  std::string out;
  out.reserve(text.size());
  size_t copied = 0;
  for (const auto& tok : tokens) {
    const auto it = renumbering.find(tok.value);
    if (it == renumbering.end()) continue;
    out.append(text, copied, tok.begin - copied);
    out += std::to_string(it->second);
    copied = tok.end;
  }
  out.append(text, copied, text.size() - copied);
  return out;
}

/// Split a critique on its four bracketed headers (first occurrence each;
/// the partially-irrelevant and highly-related headers admit both observed
/// spellings) and assign each evidence number to the first section that
/// mentions it, scanning sections in the canonical order CI, PI, HR,
/// Conclusion. Numbers outside 1..n_evidence are ignored. A critique without
/// a [Conclusion] header still sections, with has_conclusion = false.
inline SectionedCritique parse_critique_sections(const std::string& text, int n_evidence) {
  SectionedCritique out = make_empty_sectioned();
  struct Found {
    Section section;
    size_t header_begin;
    size_t body_begin;
  };
  std::vector<Found> found;
  for (Section s : {Section::CompletelyIrrelevant, Section::PartiallyIrrelevant,
                    Section::HighlyRelated, Section::Conclusion}) {
    size_t best = std::string::npos;
    size_t body = 0;
    for (const auto& marker : detail::section_markers(s)) {
      const size_t at = text.find(marker);
      if (at != std::string::npos && at < best) {
        best = at;
        body = at + marker.size();
      }
    }
    if (best != std::string::npos) found.push_back({s, best, body});
  }
  std::sort(found.begin(), found.end(),
            [](const Found& a, const Found& b) { return a.header_begin < b.header_begin; });
  for (size_t i = 0; i < found.size(); ++i) {
    const size_t end = i + 1 < found.size() ? found[i + 1].header_begin : text.size();
    std::string body = text.substr(found[i].body_begin, end - found[i].body_begin);
    out.sections[found[i].section] = std::move(body);
    if (found[i].section == Section::Conclusion) out.has_conclusion = true;
  }
  for (Section s : {Section::CompletelyIrrelevant, Section::PartiallyIrrelevant,
                    Section::HighlyRelated, Section::Conclusion}) {
    for (const auto& tok : scan_evidence_mentions(out.sections[s])) {
      if (tok.value < 1 || tok.value > n_evidence) continue;
      out.analyses.try_emplace(tok.value, s);
    }
  }
  return out;
}

inline SectionedCritique parse_critique_sections(const std::string& text, const Instance& inst) {
  return parse_critique_sections(text, static_cast<int>(inst.evidence.size()));
}

/// True when all four section headers occur (spelling variants included).
inline bool critique_has_all_sections(const std::string& text) {
  for (Section s : {Section::CompletelyIrrelevant, Section::PartiallyIrrelevant,
                    Section::HighlyRelated, Section::Conclusion}) {
    bool any = false;
    for (const auto& marker : detail::section_markers(s))
      if (text.find(marker) != std::string::npos) any = true;
    if (!any) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Batch detection
// ---------------------------------------------------------------------------

struct DetectionResult {
  std::string instance_id;
  std::string raw;
  ParsedResponse parsed;
  bool correct = false;
  std::vector<int> presentation;
};

inline void to_json(json& j, const DetectionResult& r) {
  j = json{{"instance_id", r.instance_id}, {"raw", r.raw},
           {"reasoning", r.parsed.reasoning}, {"factuality", r.parsed.factuality},
           {"valid", r.parsed.valid}, {"correct", r.correct},
           {"presentation", r.presentation}};
}
inline void from_json(const json& j, DetectionResult& r) {
  j.at("instance_id").get_to(r.instance_id);
  j.at("raw").get_to(r.raw);
  j.at("reasoning").get_to(r.parsed.reasoning);
  j.at("factuality").get_to(r.parsed.factuality);
  j.at("valid").get_to(r.parsed.valid);
  j.at("correct").get_to(r.correct);
  j.at("presentation").get_to(r.presentation);
  r.parsed.raw = r.raw;
}

struct DetectOptions {
  PromptMode mode = PromptMode::formatted;
  EvidenceOrder order = EvidenceOrder::as_stored;
  std::uint64_t seed = 0;
  SamplingParams params = SamplingParams::detection_defaults();
  int concurrency_limit = 4;
};

/// Request metadata from an already-presented instance (evidence in prompt
/// order).
inline RequestMeta detection_meta(const Instance& presented, std::string task) {
  RequestMeta meta;
  meta.task = std::move(task);
  meta.instance_id = presented.id;
  meta.gold = presented.label;
  for (const auto& e : presented.evidence) {
    meta.categories.push_back(e.category);
    meta.misleading.push_back(e.misleading);
  }
  meta.claim = presented.claim;
  return meta;
}

inline RequestMeta detection_meta(const Instance& inst, const PromptBuild& build,
                                  std::string task) {
  RequestMeta meta = detection_meta(build.presented, std::move(task));
  meta.instance_id = inst.id;
  meta.claim = inst.claim;
  return meta;
}

/// One detection call per instance, fanned out up to the concurrency limit,
/// results in input order. A backend failure for one instance yields an
/// invalid result carrying the error text in raw; the batch continues.
inline std::vector<DetectionResult> detect_batch(const std::vector<Instance>& instances,
                                                 Backend& backend, const TemplateLibrary& lib,
                                                 const DetectOptions& opts = {}) {
  std::vector<DetectionResult> results(instances.size());
  parallel_for(instances.size(), opts.concurrency_limit, [&](size_t i) {
    const Instance& inst = instances[i];
    const std::uint64_t shuffle_seed = rng::derive_seed(opts.seed, "detect_shuffle", inst.id);
    const PromptBuild build =
        build_detection_prompt(lib, inst, opts.mode, opts.order, shuffle_seed);
    DetectionResult& r = results[i];
    r.instance_id = inst.id;
    r.presentation = build.presentation;
    CompletionRequest req;
    req.prompt = build.prompt;
    req.params = opts.params;
    req.meta = detection_meta(inst, build, "detect");
    try {
      r.raw = backend.complete(req);
      r.parsed = parse_verdict(r.raw);
    } catch (const Error& e) {
      r.raw = std::string("[error] ") + e.what();
      r.parsed = ParsedResponse{};
      r.parsed.raw = r.raw;
    }
    r.correct = r.parsed.valid && r.parsed.factuality == inst.label;
  });
  return results;
}

}  // namespace haluj
