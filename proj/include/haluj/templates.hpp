#pragma once

#include <array>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "haluj/core.hpp"
#include "haluj/jsonl.hpp"
#include "haluj/templates_data.hpp"

namespace haluj {

enum class TemplateId {
  gen_partial_irrelevant,
  gen_misleading,
  filter_misleading,
  synth_golden,
  reformat_golden,
  score_critique,
  extract_categories,
  detection_formatted,
  detection_plain,
};

inline constexpr std::array<TemplateId, 9> kAllTemplateIds = {
    TemplateId::gen_partial_irrelevant, TemplateId::gen_misleading,
    TemplateId::filter_misleading,      TemplateId::synth_golden,
    TemplateId::reformat_golden,        TemplateId::score_critique,
    TemplateId::extract_categories,     TemplateId::detection_formatted,
    TemplateId::detection_plain,
};

inline std::string_view template_id_name(TemplateId id) {
  switch (id) {
    case TemplateId::gen_partial_irrelevant: return "gen_partial_irrelevant";
    case TemplateId::gen_misleading:         return "gen_misleading";
    case TemplateId::filter_misleading:      return "filter_misleading";
    case TemplateId::synth_golden:           return "synth_golden";
    case TemplateId::reformat_golden:        return "reformat_golden";
    case TemplateId::score_critique:         return "score_critique";
    case TemplateId::extract_categories:     return "extract_categories";
    case TemplateId::detection_formatted:    return "detection_formatted";
    case TemplateId::detection_plain:        return "detection_plain";
  }
  return "";
}

/// A prompt template: literal text with {name} slots. Literal braces are
/// written doubled ({{ and }}) and emitted single by render.
struct Template {
  TemplateId id;
  std::string body;
  std::set<std::string> required_placeholders;
};

namespace detail {

inline bool is_slot_start(char c) {
  return c == '_' || std::isalpha(static_cast<unsigned char>(c));
}
inline bool is_slot_char(char c) {
  return c == '_' || std::isalnum(static_cast<unsigned char>(c));
}

/// Walk the body emitting literal text via `lit` and slots via `slot`.
/// Throws on unpaired braces so malformed assets fail at load, not at use.
template <typename LitFn, typename SlotFn>
void scan_template(std::string_view body, LitFn&& lit, SlotFn&& slot) {
  size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '{') {
      if (i + 1 < body.size() && body[i + 1] == '{') {
        lit('{');
        i += 2;
        continue;
      }
      size_t j = i + 1;
      if (j < body.size() && is_slot_start(body[j])) {
        while (j < body.size() && is_slot_char(body[j])) ++j;
        if (j < body.size() && body[j] == '}') {
          slot(std::string(body.substr(i + 1, j - i - 1)));
          i = j + 1;
          continue;
        }
      }
      throw Error(Errc::template_syntax, "stray '{' at offset " + std::to_string(i));
    }
    if (c == '}') {
      if (i + 1 < body.size() && body[i + 1] == '}') {
        lit('}');
        i += 2;
        continue;
      }
      throw Error(Errc::template_syntax, "stray '}' at offset " + std::to_string(i));
    }
    lit(c);
    ++i;
  }
}

inline std::set<std::string> scan_placeholders(std::string_view body) {
  std::set<std::string> names;
  scan_template(body, [](char) {}, [&](std::string name) { names.insert(std::move(name)); });
  return names;
}

}  // namespace detail

inline Template make_template(TemplateId id, std::string body) {
  Template t;
  t.id = id;
  t.required_placeholders = detail::scan_placeholders(body);
  t.body = std::move(body);
  return t;
}

using Bindings = std::map<std::string, std::string>;

/// Substitute every slot. Bindings must cover the template's placeholder set
/// exactly: absent names raise MissingPlaceholder, extra names raise
/// UnknownPlaceholder. Substituted values are emitted verbatim (not rescanned).
inline std::string render(const Template& t, const Bindings& bindings) {
  for (const auto& name : t.required_placeholders)
    if (!bindings.count(name))
      throw Error(Errc::missing_placeholder,
                  std::string(template_id_name(t.id)) + " needs {" + name + "}");
  for (const auto& [name, _] : bindings)
    if (!t.required_placeholders.count(name))
      throw Error(Errc::unknown_placeholder,
                  std::string(template_id_name(t.id)) + " has no {" + name + "}");
  std::string out;
  out.reserve(t.body.size() + bindings.size() * 32);
  detail::scan_template(
      t.body, [&](char c) { out.push_back(c); },
      [&](std::string name) { out += bindings.at(name); });
  return out;
}

/// Render evidence as the numbered list layout used by every prompt here:
/// "«eid». «text»" items joined by blank lines, numbering taken from the
/// items' eids (callers renumber positionally before formatting).
inline std::string format_evidence_list(const std::vector<EvidenceItem>& evidence) {
  if (evidence.empty()) throw Error(Errc::invalid_argument, "empty evidence list");
  std::ostringstream out;
  for (size_t i = 0; i < evidence.size(); ++i) {
    if (i) out << "\n\n";
    out << evidence[i].eid << ". " << evidence[i].text;
  }
  return out.str();
}

/// Holds the nine templates. Defaults are compiled in; a directory override
/// replaces any template that has a matching "<id>.txt" file.
class TemplateLibrary {
 public:
  TemplateLibrary() {
    using namespace templates_data;
    add(TemplateId::gen_partial_irrelevant, kTplGenPartialIrrelevant);
    add(TemplateId::gen_misleading, kTplGenMisleading);
    add(TemplateId::filter_misleading, kTplFilterMisleading);
    add(TemplateId::synth_golden, kTplSynthGolden);
    add(TemplateId::reformat_golden, kTplReformatGolden);
    add(TemplateId::score_critique, kTplScoreCritique);
    add(TemplateId::extract_categories, kTplExtractCategories);
    add(TemplateId::detection_formatted, kTplDetectionFormatted);
    add(TemplateId::detection_plain, kTplDetectionPlain);
  }

  static TemplateLibrary with_overrides(const std::filesystem::path& dir) {
    TemplateLibrary lib;
    for (TemplateId id : kAllTemplateIds) {
      const auto file = dir / (std::string(template_id_name(id)) + ".txt");
      if (std::filesystem::exists(file)) lib.add(id, jsonl::read_file(file));
    }
    return lib;
  }

  const Template& get(TemplateId id) const { return templates_.at(id); }

  std::string render(TemplateId id, const Bindings& bindings) const {
    return haluj::render(get(id), bindings);
  }

 private:
  void add(TemplateId id, std::string_view body) {
    templates_.insert_or_assign(id, make_template(id, std::string(body)));
  }

  std::map<TemplateId, Template> templates_;
};

/// Lowercase label word used by the generation/filter prompts.
inline std::string label_word(Label l) { return detail::ascii_lower(label_name(l)); }

/// The contrary direction a misleading item should push toward.
inline std::string opposite_label_word(Label l) {
  switch (l) {
    case Label::True:  return "false";
    case Label::False: return "true";
    default:
      throw Error(Errc::invalid_argument, "opposite label undefined for " + std::string(label_name(l)));
  }
}

}  // namespace haluj
