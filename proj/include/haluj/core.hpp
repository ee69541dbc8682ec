#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace haluj {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class Errc {
  invalid_argument,
  io_error,
  auth_missing,
  backend_unavailable,
  script_miss,
  oracle_miss,
  missing_placeholder,
  unknown_placeholder,
  template_syntax,
  pool_exhausted,
  malformed_list,
  malformed_response,
  label_mismatch,
  missing_sections,
  constant_series,
  all_excluded,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument:    return "invalid_argument";
    case Errc::io_error:            return "io_error";
    case Errc::auth_missing:        return "auth_missing";
    case Errc::backend_unavailable: return "backend_unavailable";
    case Errc::script_miss:         return "script_miss";
    case Errc::oracle_miss:         return "oracle_miss";
    case Errc::missing_placeholder: return "missing_placeholder";
    case Errc::unknown_placeholder: return "unknown_placeholder";
    case Errc::template_syntax:     return "template_syntax";
    case Errc::pool_exhausted:      return "pool_exhausted";
    case Errc::malformed_list:      return "malformed_list";
    case Errc::malformed_response:  return "malformed_response";
    case Errc::label_mismatch:      return "label_mismatch";
    case Errc::missing_sections:    return "missing_sections";
    case Errc::constant_series:     return "constant_series";
    case Errc::all_excluded:        return "all_excluded";
  }
  return "unknown";
}

/// Toolkit-wide exception carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/// Verdict on a claim. Invalid is reserved for unparseable predictions and
/// never appears as a gold label; it still participates in metrics (an
/// invalid prediction counts as incorrect).
enum class Label { True, False, Neutral, Invalid };

inline std::string_view label_name(Label l) {
  switch (l) {
    case Label::True:    return "True";
    case Label::False:   return "False";
    case Label::Neutral: return "Neutral";
    case Label::Invalid: return "Invalid";
  }
  return "Invalid";
}

inline bool is_gold_label(Label l) { return l != Label::Invalid; }

namespace detail {
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}
}  // namespace detail

/// Canonicalize a model-emitted label token. Case-insensitive "true"/"false"/
/// "neutral" (bare boolean tokens included); everything else maps to Invalid.
/// Total function: never throws.
inline Label normalize_label(std::string_view raw) {
  const std::string t = detail::ascii_lower(detail::trim(raw));
  if (t == "true") return Label::True;
  if (t == "false") return Label::False;
  if (t == "neutral") return Label::Neutral;
  return Label::Invalid;
}

/// Strict parse of a gold label as stored in files ("True"/"False"/"Neutral").
inline Label parse_gold_label(std::string_view s) {
  if (s == "True") return Label::True;
  if (s == "False") return Label::False;
  if (s == "Neutral") return Label::Neutral;
  throw Error(Errc::invalid_argument, "not a gold label: '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Evidence
// ---------------------------------------------------------------------------

/// Relevance class of one evidence text. Gold data uses only the first three;
/// Unmentioned appears in predicted category maps when a critique never
/// touches a piece.
enum class EvidenceCategory { CompletelyIrrelevant, PartiallyIrrelevant, HighlyRelated, Unmentioned };

inline std::string_view category_name(EvidenceCategory c) {
  switch (c) {
    case EvidenceCategory::CompletelyIrrelevant: return "completely_irrelevant";
    case EvidenceCategory::PartiallyIrrelevant:  return "partially_irrelevant";
    case EvidenceCategory::HighlyRelated:        return "highly_related";
    case EvidenceCategory::Unmentioned:          return "unmentioned";
  }
  return "unmentioned";
}

inline EvidenceCategory parse_category(std::string_view s) {
  if (s == "completely_irrelevant") return EvidenceCategory::CompletelyIrrelevant;
  if (s == "partially_irrelevant") return EvidenceCategory::PartiallyIrrelevant;
  if (s == "highly_related") return EvidenceCategory::HighlyRelated;
  if (s == "unmentioned") return EvidenceCategory::Unmentioned;
  throw Error(Errc::invalid_argument, "not an evidence category: '" + std::string(s) + "'");
}

/// Rank used for grouped ordering: o < p < r.
inline int category_rank(EvidenceCategory c) {
  switch (c) {
    case EvidenceCategory::CompletelyIrrelevant: return 0;
    case EvidenceCategory::PartiallyIrrelevant:  return 1;
    case EvidenceCategory::HighlyRelated:        return 2;
    case EvidenceCategory::Unmentioned:          return 3;
  }
  return 3;
}

struct EvidenceItem {
  int eid = 0;                           // 1-based, unique within an instance
  std::string text;
  EvidenceCategory category = EvidenceCategory::HighlyRelated;
  bool misleading = false;               // implies category == HighlyRelated
  std::optional<std::string> explanation;  // present iff misleading

  friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

enum class Source { single_evidence, multi_evidence };

inline std::string_view source_name(Source s) {
  return s == Source::single_evidence ? "single_evidence" : "multi_evidence";
}

inline Source parse_source(std::string_view s) {
  if (s == "single_evidence") return Source::single_evidence;
  if (s == "multi_evidence") return Source::multi_evidence;
  throw Error(Errc::invalid_argument, "not a source: '" + std::string(s) + "'");
}

/// A claim, its gold label, and the ordered evidence set with per-item gold
/// categories.
struct Instance {
  std::string id;
  std::string claim;
  Label label = Label::True;
  std::vector<EvidenceItem> evidence;
  Source source = Source::multi_evidence;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Check structural invariants shared by every instance: gold label, gold
/// categories, 1..n eids, misleading/explanation pairing, single-evidence
/// arity. Throws on violation.
inline void validate_instance(const Instance& inst) {
  if (!is_gold_label(inst.label))
    throw Error(Errc::invalid_argument, "instance " + inst.id + ": Invalid gold label");
  if (inst.source == Source::single_evidence && inst.evidence.size() != 1)
    throw Error(Errc::invalid_argument, "instance " + inst.id + ": single_evidence requires exactly one item");
  for (size_t i = 0; i < inst.evidence.size(); ++i) {
    const auto& e = inst.evidence[i];
    if (e.eid != static_cast<int>(i) + 1)
      throw Error(Errc::invalid_argument, "instance " + inst.id + ": eids must be 1..n without gaps");
    if (e.category == EvidenceCategory::Unmentioned)
      throw Error(Errc::invalid_argument, "instance " + inst.id + ": gold category must be o/p/r");
    if (e.misleading && e.category != EvidenceCategory::HighlyRelated)
      throw Error(Errc::invalid_argument, "instance " + inst.id + ": misleading implies highly_related");
    if (e.misleading != e.explanation.has_value())
      throw Error(Errc::invalid_argument, "instance " + inst.id + ": explanation present iff misleading");
    if (e.text.empty())
      throw Error(Errc::invalid_argument, "instance " + inst.id + ": empty evidence text");
  }
}

// ---------------------------------------------------------------------------
// Composition rule
// ---------------------------------------------------------------------------

struct CompositionReport {
  bool ok = false;
  int n_o = 0;
  int n_p = 0;
  int n_r = 0;
};

/// Tally gold categories of a multi-evidence instance and test the dataset
/// composition rule: exactly 2 completely-irrelevant, exactly 4 partially-
/// irrelevant, and 1 to 3 highly-related pieces.
inline CompositionReport composition_check(const Instance& inst) {
  if (inst.source != Source::multi_evidence)
    throw Error(Errc::invalid_argument, "composition_check requires a multi_evidence instance");
  CompositionReport rep;
  for (const auto& e : inst.evidence) {
    switch (e.category) {
      case EvidenceCategory::CompletelyIrrelevant: ++rep.n_o; break;
      case EvidenceCategory::PartiallyIrrelevant:  ++rep.n_p; break;
      case EvidenceCategory::HighlyRelated:        ++rep.n_r; break;
      case EvidenceCategory::Unmentioned: break;
    }
  }
  rep.ok = rep.n_o == 2 && rep.n_p == 4 && rep.n_r >= 1 && rep.n_r <= 3;
  return rep;
}

// ---------------------------------------------------------------------------
// Parsed model output
// ---------------------------------------------------------------------------

/// The {reasoning, factuality} contract extracted from a raw completion.
/// valid == false implies factuality == Invalid and reasoning is empty.
struct ParsedResponse {
  std::string reasoning;
  Label factuality = Label::Invalid;
  std::string raw;
  bool valid = false;

  friend bool operator==(const ParsedResponse&, const ParsedResponse&) = default;
};

/// Section names of the reformatted critique layout.
enum class Section { CompletelyIrrelevant, PartiallyIrrelevant, HighlyRelated, Conclusion };

inline std::string_view section_name(Section s) {
  switch (s) {
    case Section::CompletelyIrrelevant: return "completely_irrelevant";
    case Section::PartiallyIrrelevant:  return "partially_irrelevant";
    case Section::HighlyRelated:        return "highly_related";
    case Section::Conclusion:           return "conclusion";
  }
  return "conclusion";
}

inline Section parse_section(std::string_view s) {
  if (s == "completely_irrelevant") return Section::CompletelyIrrelevant;
  if (s == "partially_irrelevant") return Section::PartiallyIrrelevant;
  if (s == "highly_related") return Section::HighlyRelated;
  if (s == "conclusion") return Section::Conclusion;
  throw Error(Errc::invalid_argument, "not a section: '" + std::string(s) + "'");
}

/// A critique split into its four bracketed sections plus per-evidence
/// analysis assignments (eid -> section that discusses it).
struct SectionedCritique {
  std::map<Section, std::string> sections;  // always all four keys, body may be ""
  std::map<int, Section> analyses;
  bool has_conclusion = false;  // false when the [Conclusion] header was absent

  const std::string& section_text(Section s) const { return sections.at(s); }

  friend bool operator==(const SectionedCritique&, const SectionedCritique&) = default;
};

inline SectionedCritique make_empty_sectioned() {
  SectionedCritique sc;
  sc.sections[Section::CompletelyIrrelevant] = "";
  sc.sections[Section::PartiallyIrrelevant] = "";
  sc.sections[Section::HighlyRelated] = "";
  sc.sections[Section::Conclusion] = "";
  return sc;
}

// ---------------------------------------------------------------------------
// Preference pairs & sampling
// ---------------------------------------------------------------------------

/// One DPO training example. chosen_label always equals the instance's gold
/// label; rejected_label never does.
struct PreferencePair {
  std::string instance_id;
  std::string prompt;
  std::string chosen;
  std::string rejected;
  Label chosen_label = Label::True;
  Label rejected_label = Label::False;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 0.9;
  int max_tokens = 2048;
  int n_samples = 30;

  /// Defaults used when sampling preference candidates.
  static SamplingParams preference_defaults() { return SamplingParams{1.0, 0.9, 2048, 30}; }
  /// Deterministic single-shot defaults used for detection runs.
  static SamplingParams detection_defaults() { return SamplingParams{0.0, 1.0, 2048, 1}; }
  /// Longer budget for golden-reasoning synthesis.
  static SamplingParams synthesis_defaults() { return SamplingParams{1.0, 0.9, 4096, 1}; }

  friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

inline void validate_sampling(const SamplingParams& p) {
  if (p.temperature < 0) throw Error(Errc::invalid_argument, "temperature must be >= 0");
  if (!(p.top_p > 0 && p.top_p <= 1)) throw Error(Errc::invalid_argument, "top_p must be in (0, 1]");
  if (p.max_tokens <= 0) throw Error(Errc::invalid_argument, "max_tokens must be positive");
  if (p.n_samples <= 0) throw Error(Errc::invalid_argument, "n_samples must be positive");
}

// ---------------------------------------------------------------------------
// JSON encoding (unknown keys tolerated on read, dropped on write)
// ---------------------------------------------------------------------------

inline void to_json(json& j, const Label& l) { j = std::string(label_name(l)); }
inline void from_json(const json& j, Label& l) {
  const auto s = j.get<std::string>();
  if (s == "Invalid") { l = Label::Invalid; return; }
  l = parse_gold_label(s);
}

inline void to_json(json& j, const EvidenceCategory& c) { j = std::string(category_name(c)); }
inline void from_json(const json& j, EvidenceCategory& c) { c = parse_category(j.get<std::string>()); }

inline void to_json(json& j, const Section& s) { j = std::string(section_name(s)); }
inline void from_json(const json& j, Section& s) { s = parse_section(j.get<std::string>()); }

inline void to_json(json& j, const EvidenceItem& e) {
  j = json{{"eid", e.eid},
           {"text", e.text},
           {"category", e.category},
           {"misleading", e.misleading}};
  if (e.explanation) j["explanation"] = *e.explanation;
}
inline void from_json(const json& j, EvidenceItem& e) {
  j.at("eid").get_to(e.eid);
  j.at("text").get_to(e.text);
  j.at("category").get_to(e.category);
  e.misleading = j.value("misleading", false);
  if (j.contains("explanation")) e.explanation = j.at("explanation").get<std::string>();
  else e.explanation.reset();
}

inline void to_json(json& j, const Instance& inst) {
  j = json{{"id", inst.id},
           {"claim", inst.claim},
           {"label", inst.label},
           {"source", std::string(source_name(inst.source))},
           {"evidence", inst.evidence}};
}
inline void from_json(const json& j, Instance& inst) {
  j.at("id").get_to(inst.id);
  j.at("claim").get_to(inst.claim);
  j.at("label").get_to(inst.label);
  inst.source = parse_source(j.at("source").get<std::string>());
  j.at("evidence").get_to(inst.evidence);
}

inline void to_json(json& j, const ParsedResponse& p) {
  j = json{{"reasoning", p.reasoning}, {"factuality", p.factuality}, {"raw", p.raw}, {"valid", p.valid}};
}
inline void from_json(const json& j, ParsedResponse& p) {
  j.at("reasoning").get_to(p.reasoning);
  j.at("factuality").get_to(p.factuality);
  j.at("raw").get_to(p.raw);
  j.at("valid").get_to(p.valid);
}

inline void to_json(json& j, const SectionedCritique& sc) {
  json sections = json::object();
  for (const auto& [sec, text] : sc.sections) sections[std::string(section_name(sec))] = text;
  json analyses = json::object();
  for (const auto& [eid, sec] : sc.analyses) analyses[std::to_string(eid)] = sec;
  j = json{{"sections", sections}, {"analyses", analyses}, {"has_conclusion", sc.has_conclusion}};
}
inline void from_json(const json& j, SectionedCritique& sc) {
  sc = make_empty_sectioned();
  for (const auto& [k, v] : j.at("sections").items()) sc.sections[parse_section(k)] = v.get<std::string>();
  for (const auto& [k, v] : j.at("analyses").items()) sc.analyses[std::stoi(k)] = v.get<Section>();
  sc.has_conclusion = j.value("has_conclusion", true);
}

inline void to_json(json& j, const PreferencePair& p) {
  j = json{{"instance_id", p.instance_id},
           {"prompt", p.prompt},
           {"chosen", p.chosen},
           {"rejected", p.rejected},
           {"chosen_label", p.chosen_label},
           {"rejected_label", p.rejected_label}};
}
inline void from_json(const json& j, PreferencePair& p) {
  j.at("instance_id").get_to(p.instance_id);
  j.at("prompt").get_to(p.prompt);
  j.at("chosen").get_to(p.chosen);
  j.at("rejected").get_to(p.rejected);
  j.at("chosen_label").get_to(p.chosen_label);
  j.at("rejected_label").get_to(p.rejected_label);
}

inline void to_json(json& j, const SamplingParams& p) {
  j = json{{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_tokens", p.max_tokens}, {"n_samples", p.n_samples}};
}
inline void from_json(const json& j, SamplingParams& p) {
  j.at("temperature").get_to(p.temperature);
  j.at("top_p").get_to(p.top_p);
  j.at("max_tokens").get_to(p.max_tokens);
  j.at("n_samples").get_to(p.n_samples);
}

}  // namespace haluj
