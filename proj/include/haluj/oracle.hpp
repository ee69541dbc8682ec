#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "haluj/core.hpp"
#include "haluj/detector.hpp"
#include "haluj/gateway.hpp"
#include "haluj/parsing.hpp"
#include "haluj/rng.hpp"

namespace haluj {

/// Label an adversary would swap in: True and False trade places, Neutral
/// degrades to False.
inline Label corrupt_label(Label gold) {
  switch (gold) {
    case Label::True:    return Label::False;
    case Label::False:   return Label::True;
    case Label::Neutral: return Label::False;
    case Label::Invalid: return Label::Invalid;
  }
  return Label::Invalid;
}

enum class CorruptionAxis { per_sample, per_instance };

inline std::string_view corruption_axis_name(CorruptionAxis a) {
  return a == CorruptionAxis::per_sample ? "per_sample" : "per_instance";
}

inline CorruptionAxis parse_corruption_axis(std::string_view s) {
  if (s == "per_sample") return CorruptionAxis::per_sample;
  if (s == "per_instance") return CorruptionAxis::per_instance;
  throw Error(Errc::invalid_argument, "not a corruption axis: '" + std::string(s) + "'");
}

/// Integer-percent corruption schedule over 1-based ordinals. Exactly
/// floor(m * pct / 100) of the first m ordinals are corrupted, spread evenly:
/// pct 20 hits every 5th ordinal, pct 50 every 2nd, pct 100 all of them.
/// Pure integer arithmetic, so expected metric values are exact.
struct CorruptionSchedule {
  int pct = 0;  // 0..100
  CorruptionAxis axis = CorruptionAxis::per_instance;

  bool corrupt_at(long long ordinal) const {
    if (pct <= 0) return false;
    return (ordinal * pct) / 100 > ((ordinal - 1) * pct) / 100;
  }
};

/// "Evidence 3", "Evidence 3 and 7", "Evidence 2, 4, and 5" — the phrasing
/// scan_evidence_mentions recognizes, used by fabricated critiques.
inline std::string enumerate_evidence(const std::vector<int>& eids) {
  std::ostringstream out;
  out << "Evidence ";
  for (size_t i = 0; i < eids.size(); ++i) {
    if (i > 0) {
      if (eids.size() > 2) out << ",";
      out << " ";
      if (i + 1 == eids.size()) out << "and ";
    }
    out << eids[i];
  }
  return out.str();
}

/// A critique in the canonical four-section layout whose analyses reproduce
/// the given presented-order categories exactly, concluding with `verdict`.
/// Shared by the oracle backend and test fixtures.
inline std::string build_reference_critique(const std::vector<EvidenceCategory>& categories,
                                            const std::vector<bool>& misleading, Label verdict) {
  std::vector<int> ci, pi;
  std::ostringstream hr;
  bool hr_any = false;
  for (size_t k = 0; k < categories.size(); ++k) {
    const int eid = static_cast<int>(k) + 1;
    switch (categories[k]) {
      case EvidenceCategory::CompletelyIrrelevant: ci.push_back(eid); break;
      case EvidenceCategory::PartiallyIrrelevant:  pi.push_back(eid); break;
      case EvidenceCategory::HighlyRelated:
        if (hr_any) hr << "\n";
        if (k < misleading.size() && misleading[k])
          hr << "Evidence " << eid
             << " is closely tied to the claim but frames the facts in a confusing way; on a "
                "careful reading it does not overturn the verdict.";
        else
          hr << "Evidence " << eid
             << " bears directly on the claim and is decisive for the verdict.";
        hr_any = true;
        break;
      case EvidenceCategory::Unmentioned: break;
    }
  }
  std::ostringstream out;
  out << "To verify the factuality of the claim, the reasoning is as follows.\n";
  out << "[Completely Irrelevant Evidence]\n";
  if (ci.empty())
    out << "No completely irrelevant material appears in the provided set.\n";
  else if (ci.size() == 1)
    out << enumerate_evidence(ci)
        << " covers a subject with no bearing on the claim and offers nothing for judging it.\n";
  else
    out << enumerate_evidence(ci)
        << " cover subjects with no bearing on the claim and offer nothing for judging it.\n";
  out << "[Partial Irrelevant Evidence]\n";
  if (pi.empty())
    out << "No partially irrelevant material appears in the provided set.\n";
  else
    out << enumerate_evidence(pi)
        << (pi.size() == 1 ? " shares" : " share")
        << " the claim's subject, yet the content stops short of addressing what the claim "
           "asserts.\n";
  out << "[Highly related Evidence]\n";
  if (hr_any)
    out << hr.str() << "\n";
  else
    out << "No highly related material appears in the provided set.\n";
  out << "[Conclusion]\n";
  out << "Aggregating the analysis above, the claim is " << label_word(verdict) << ".";
  return out.str();
}

/// Deterministic backend fabricating perfect (or schedule-corrupted)
/// responses from the request's structured metadata; it never reads the
/// prompt text. Corruption applies to the detect task only.
class OracleBackend : public Backend {
 public:
  explicit OracleBackend(CorruptionSchedule schedule = {}, std::string model = "oracle")
      : schedule_(schedule) {
    spec_.kind = BackendKind::oracle;
    spec_.model = std::move(model);
  }

  /// Instance ids in file order; ordinal source for per-instance corruption.
  void register_instance_ids(const std::vector<std::string>& ids) {
    for (const auto& id : ids)
      ordinals_.emplace(id, static_cast<long long>(ordinals_.size()) + 1);
  }

  const CorruptionSchedule& schedule() const { return schedule_; }

  std::string complete(const CompletionRequest& req) override {
    const RequestMeta& m = req.meta;
    if (m.task == "detect") return answer_detect(req);
    if (m.task == "synth_golden") return verdict_body(m, require_gold(m));
    if (m.task == "reformat_golden")
      return build_reference_critique(m.categories, m.misleading, require_gold(m));
    if (m.task == "score")
      return json{{"reasoning", "The critique addresses every item and matches the verdict."},
                  {"score", 100}}
          .dump();
    if (m.task == "extract") return answer_extract(m);
    if (m.task == "gen_partial") return answer_gen_partial(m);
    if (m.task == "gen_misleading") return answer_gen_misleading(m);
    if (m.task == "filter")
      return "[{\"explanation\": \"The candidate stays consistent with the recorded outcome.\", "
             "\"classification\": True}]";
    if (m.task == "expand") return answer_expand(m);
    throw Error(Errc::oracle_miss, "oracle has no handler for task '" + m.task + "'");
  }

  const BackendSpec& spec() const override { return spec_; }

 private:
  static Label require_gold(const RequestMeta& m) {
    if (!m.gold)
      throw Error(Errc::oracle_miss, "request for " + m.instance_id + " carries no gold label");
    return *m.gold;
  }

  std::string verdict_body(const RequestMeta& m, Label verdict) const {
    return json{{"factuality", std::string(label_name(verdict))},
                {"reasoning", build_reference_critique(m.categories, m.misleading, verdict)}}
        .dump();
  }

  std::string answer_detect(const CompletionRequest& req) const {
    const RequestMeta& m = req.meta;
    Label verdict = require_gold(m);
    if (schedule_.pct > 0) {
      long long ordinal = 0;
      if (schedule_.axis == CorruptionAxis::per_sample) {
        ordinal = req.sample_index + 1;
      } else {
        const auto it = ordinals_.find(m.instance_id);
        if (it == ordinals_.end())
          throw Error(Errc::oracle_miss, "instance " + m.instance_id +
                                             " not registered for per-instance corruption");
        ordinal = it->second;
      }
      if (schedule_.corrupt_at(ordinal)) verdict = corrupt_label(verdict);
    }
    return verdict_body(m, verdict);
  }

  std::string answer_extract(const RequestMeta& m) const {
    json ci = json::array(), pi = json::array(), hr = json::array();
    for (size_t k = 0; k < m.categories.size(); ++k) {
      const int eid = static_cast<int>(k) + 1;
      switch (m.categories[k]) {
        case EvidenceCategory::CompletelyIrrelevant: ci.push_back(eid); break;
        case EvidenceCategory::PartiallyIrrelevant:  pi.push_back(eid); break;
        case EvidenceCategory::HighlyRelated:        hr.push_back(eid); break;
        case EvidenceCategory::Unmentioned: break;
      }
    }
    return json{{"Completely Irrelevant Evidence", ci},
                {"Partial Irrelevant Evidence", pi},
                {"Highly related Evidence", hr},
                {"Unmentioned Evidence", json::array()}}
        .dump();
  }

  static const std::vector<std::string>& filler_pool() {
    static const std::vector<std::string> pool{
        "Regional archives keep extensive notes on the surrounding circumstances.",
        "Later summaries repeat the same background without adding new particulars.",
        "Contemporary observers recorded the setting in considerable detail.",
        "Several compilations place the material alongside unrelated chronicles.",
        "The account continues with remarks on customs of the period.",
        "Catalogued correspondence from the era mentions the same setting in passing.",
        "A separate register lists adjacent entries of a similar character.",
        "Commentaries from the following decade revisit the same ground.",
        "The narrative closes with general observations about the locality.",
        "Subsequent editions preserved the passage without alteration.",
    };
    return pool;
  }

  static std::string pad_paragraph(std::string text, std::uint64_t h, int target_words) {
    const auto& pool = filler_pool();
    size_t i = static_cast<size_t>(h % pool.size());
    while (parsing::word_count(text) < target_words) {
      text += " " + pool[i % pool.size()];
      ++i;
    }
    return text;
  }

  std::string answer_gen_partial(const RequestMeta& m) const {
    json arr = json::array();
    for (int k = 0; k < 4; ++k) {
      std::ostringstream para;
      para << "Accounts that touch on the statement '" << m.claim
           << "' usually open with background on its subject, and the " << ordinal_word(k)
           << " survey under record " << m.instance_id << " is no exception.";
      arr.push_back(pad_paragraph(
          para.str(), rng::fnv1a64(m.instance_id + "/partial/" + std::to_string(k)), 150));
    }
    return arr.dump();
  }

  std::string answer_gen_misleading(const RequestMeta& m) const {
    json arr = json::array();
    for (int k = 0; k < 3; ++k) {
      std::ostringstream para;
      para << "One widely copied summary of the matter behind '" << m.claim
           << "' arranges the " << ordinal_word(k)
           << " set of details so that a hurried reader could take away the opposite outcome.";
      json obj{{"evidence",
                pad_paragraph(para.str(),
                              rng::fnv1a64(m.instance_id + "/mislead/" + std::to_string(k)), 150)},
               {"explanation",
                "The " + std::string(ordinal_word(k)) +
                    " summary foregrounds incidental details that suggest the opposite outcome "
                    "while never contradicting the recorded one."}};
      arr.push_back(obj);
    }
    return arr.dump();
  }

  std::string answer_expand(const RequestMeta& m) const {
    if (m.evidence_text.empty())
      throw Error(Errc::oracle_miss, "expand request carries no paragraph");
    return pad_paragraph(m.evidence_text, rng::fnv1a64(m.evidence_text), 150);
  }

  static const char* ordinal_word(int k) {
    switch (k) {
      case 0: return "first";
      case 1: return "second";
      case 2: return "third";
      default: return "fourth";
    }
  }

  BackendSpec spec_;
  CorruptionSchedule schedule_;
  std::map<std::string, long long> ordinals_;
};

}  // namespace haluj
