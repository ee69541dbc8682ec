#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "haluj/core.hpp"
#include "haluj/detector.hpp"
#include "haluj/gateway.hpp"
#include "haluj/jsonl.hpp"
#include "haluj/templates.hpp"

namespace haluj {

// ---------------------------------------------------------------------------
// Label accuracy
// ---------------------------------------------------------------------------

/// Fraction of correct predictions; invalid parses count as incorrect.
inline double label_accuracy(const std::vector<DetectionResult>& results) {
  if (results.empty()) throw Error(Errc::invalid_argument, "label_accuracy: empty results");
  size_t correct = 0;
  for (const auto& r : results)
    if (r.correct) ++correct;
  return static_cast<double>(correct) / static_cast<double>(results.size());
}

// ---------------------------------------------------------------------------
// Critique scoring
// ---------------------------------------------------------------------------

struct CritiqueScore {
  std::string instance_id;
  int score = 0;  // 1..100
  std::string judge_reasoning;
};

inline void to_json(json& j, const CritiqueScore& s) {
  j = json{{"instance_id", s.instance_id}, {"score", s.score},
           {"judge_reasoning", s.judge_reasoning}};
}

struct JudgeOptions {
  int max_attempts = 3;
  SamplingParams params = SamplingParams::detection_defaults();
  PromptMode mode = PromptMode::formatted;  // mode the detection prompts were built with
  int concurrency_limit = 4;
};

struct CritiqueScoring {
  std::vector<CritiqueScore> scores;  // included instances, input order
  double mean = 0.0;
  size_t excluded = 0;
};

namespace detail {

inline std::optional<int> parse_judge_score(const json& v) {
  double d;
  if (v.is_number_integer()) d = static_cast<double>(v.get<std::int64_t>());
  else if (v.is_number_float()) d = v.get<double>();
  else return std::nullopt;
  if (d != std::floor(d)) return std::nullopt;
  const int s = static_cast<int>(d);
  if (s < 1 || s > 100) return std::nullopt;
  return s;
}

inline Instance find_instance(const std::vector<Instance>& instances, const std::string& id) {
  for (const auto& inst : instances)
    if (inst.id == id) return inst;
  throw Error(Errc::invalid_argument, "no instance with id " + id);
}

}  // namespace detail

/// Judge-score every detection result against the prompt it answered. The
/// whole raw response is scored, parseable or not. Instances whose judge
/// calls stay malformed/out-of-range after retries are excluded from the
/// mean, never scored zero.
inline CritiqueScoring score_critiques(const std::vector<DetectionResult>& results,
                                       const std::vector<Instance>& instances, Backend& judge,
                                       const TemplateLibrary& lib, const JudgeOptions& opts) {
  if (results.empty()) throw Error(Errc::invalid_argument, "score_critiques: empty results");
  std::vector<std::optional<CritiqueScore>> slots(results.size());
  parallel_for(results.size(), opts.concurrency_limit, [&](size_t i) {
    const DetectionResult& r = results[i];
    const Instance inst = detail::find_instance(instances, r.instance_id);
    const Instance presented = apply_presentation(inst, r.presentation);
    const std::string detect_prompt =
        lib.render(opts.mode == PromptMode::formatted ? TemplateId::detection_formatted
                                                      : TemplateId::detection_plain,
                   {{"claim", presented.claim},
                    {"evidences", format_evidence_list(presented.evidence)}});
    CompletionRequest req;
    req.prompt = lib.render(TemplateId::score_critique,
                            {{"prompt", detect_prompt}, {"response", r.raw}});
    req.params = opts.params;
    req.meta.task = "score";
    req.meta.instance_id = r.instance_id;
    for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
      req.sample_index = attempt - 1;
      std::string raw;
      try {
        raw = judge.complete(req);
      } catch (const Error&) {
        continue;
      }
      const auto obj = parsing::parse_first_object(raw);
      if (!obj || !obj->contains("score")) continue;
      const auto score = detail::parse_judge_score(obj->at("score"));
      if (!score) continue;
      CritiqueScore cs;
      cs.instance_id = r.instance_id;
      cs.score = *score;
      if (obj->contains("reasoning") && obj->at("reasoning").is_string())
        cs.judge_reasoning = obj->at("reasoning").get<std::string>();
      slots[i] = std::move(cs);
      return;
    }
  });
  CritiqueScoring out;
  double sum = 0.0;  // input-order accumulation, reproducible
  for (auto& slot : slots) {
    if (slot) {
      sum += slot->score;
      out.scores.push_back(std::move(*slot));
    } else {
      ++out.excluded;
    }
  }
  if (out.scores.empty())
    throw Error(Errc::all_excluded, "score_critiques: every instance excluded");
  out.mean = sum / static_cast<double>(out.scores.size());
  return out;
}

// ---------------------------------------------------------------------------
// Evidence matching
// ---------------------------------------------------------------------------

struct CategoryMap {
  std::string instance_id;
  std::map<int, EvidenceCategory> assignment;  // totalized: one entry per eid
  bool extraction_failed = false;
};

inline void to_json(json& j, const CategoryMap& m) {
  json a = json::object();
  for (const auto& [eid, cat] : m.assignment)
    a[std::to_string(eid)] = category_name(cat);
  j = json{{"instance_id", m.instance_id}, {"assignment", a},
           {"extraction_failed", m.extraction_failed}};
}

namespace detail {

inline const json* find_category_key(const json& obj, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (obj.contains(n)) return &obj.at(n);
  return nullptr;
}

/// Extract integer eids from a JSON list, ignoring anything non-integral.
inline std::vector<int> eid_list(const json& v) {
  std::vector<int> out;
  if (!v.is_array()) return out;
  for (const auto& e : v) {
    if (e.is_number_integer()) out.push_back(e.get<int>());
    else if (e.is_string()) {
      try { out.push_back(std::stoi(e.get<std::string>())); } catch (...) {}
    }
  }
  return out;
}

}  // namespace detail

/// Ask the judge which category the critique assigned each evidence piece,
/// then totalize: duplicates resolve Highly related > Partial > Completely >
/// Unmentioned, absent eids become Unmentioned. Judge failure after retries
/// degrades to an all-Unmentioned map with the failure flagged.
inline CategoryMap extract_category_map(const Instance& presented, const std::string& critique_text,
                                        Backend& judge, const TemplateLibrary& lib,
                                        const JudgeOptions& opts) {
  if (critique_text.empty())
    throw Error(Errc::invalid_argument, "extract_category_map: empty critique");
  CategoryMap out;
  out.instance_id = presented.id;
  const int n = static_cast<int>(presented.evidence.size());

  CompletionRequest req;
  req.prompt = lib.render(TemplateId::extract_categories,
                          {{"evidence", format_evidence_list(presented.evidence)},
                           {"critique", critique_text}});
  req.params = opts.params;
  req.meta = detection_meta(presented, "extract");

  std::optional<json> parsed;
  for (int attempt = 1; attempt <= opts.max_attempts && !parsed; ++attempt) {
    req.sample_index = attempt - 1;
    std::string raw;
    try {
      raw = judge.complete(req);
    } catch (const Error&) {
      continue;
    }
    auto obj = parsing::parse_first_object(raw);
    if (obj) parsed = std::move(*obj);
  }
  if (!parsed) {
    out.extraction_failed = true;
    for (int eid = 1; eid <= n; ++eid)
      out.assignment[eid] = EvidenceCategory::Unmentioned;
    return out;
  }

  struct KeyCat {
    std::initializer_list<const char*> names;
    EvidenceCategory cat;
  };
  // Precedence order: first assignment of an eid wins.
  const KeyCat keys[] = {
      {{"Highly related Evidence", "Highly Related Evidence"}, EvidenceCategory::HighlyRelated},
      {{"Partial Irrelevant Evidence", "Partially Irrelevant Evidence"},
       EvidenceCategory::PartiallyIrrelevant},
      {{"Completely Irrelevant Evidence"}, EvidenceCategory::CompletelyIrrelevant},
      {{"Unmentioned Evidence", "Unmentioned"}, EvidenceCategory::Unmentioned},
  };
  for (const auto& kc : keys) {
    const json* lst = detail::find_category_key(*parsed, kc.names);
    if (!lst) continue;
    for (int eid : detail::eid_list(*lst))
      if (eid >= 1 && eid <= n) out.assignment.try_emplace(eid, kc.cat);
  }
  for (int eid = 1; eid <= n; ++eid)
    out.assignment.try_emplace(eid, EvidenceCategory::Unmentioned);
  return out;
}

/// Confusion rows: predicted o, p, r, Unmentioned. Columns: gold o, p, r.
using Confusion = std::array<std::array<long, 3>, 4>;

struct MatchingReport {
  double rate = 0.0;        // micro: matched pieces / total pieces
  double macro_rate = 0.0;  // mean of per-instance rates
  long n_pieces = 0;
  long matched = 0;
  long unmentioned = 0;  // pieces the critique never placed (never match)
  Confusion confusion{};
};

/// Micro-averaged per-piece match rate against gold categories; pieces the
/// extraction left Unmentioned are counted in the denominator as mismatches.
inline MatchingReport evidence_matching_rate(const std::vector<CategoryMap>& maps,
                                             const std::vector<Instance>& presented) {
  if (maps.size() != presented.size() || maps.empty())
    throw Error(Errc::invalid_argument, "evidence_matching_rate: maps/instances mismatch");
  MatchingReport rep;
  double macro_sum = 0.0;
  for (size_t i = 0; i < maps.size(); ++i) {
    const CategoryMap& m = maps[i];
    const Instance& inst = presented[i];
    if (m.instance_id != inst.id)
      throw Error(Errc::invalid_argument,
                  "evidence_matching_rate: map " + m.instance_id + " vs instance " + inst.id);
    long inst_matched = 0;
    for (const auto& e : inst.evidence) {
      const auto it = m.assignment.find(e.eid);
      const EvidenceCategory pred =
          it == m.assignment.end() ? EvidenceCategory::Unmentioned : it->second;
      const size_t row = pred == EvidenceCategory::Unmentioned
                             ? 3
                             : static_cast<size_t>(category_rank(pred));
      rep.confusion[row][static_cast<size_t>(category_rank(e.category))] += 1;
      ++rep.n_pieces;
      if (pred == EvidenceCategory::Unmentioned) ++rep.unmentioned;
      if (pred == e.category) {
        ++rep.matched;
        ++inst_matched;
      }
    }
    macro_sum += static_cast<double>(inst_matched) / static_cast<double>(inst.evidence.size());
  }
  rep.rate = static_cast<double>(rep.matched) / static_cast<double>(rep.n_pieces);
  rep.macro_rate = macro_sum / static_cast<double>(maps.size());
  return rep;
}

// ---------------------------------------------------------------------------
// Pearson correlation
// ---------------------------------------------------------------------------

/// Sample Pearson coefficient; throws on length mismatch, |x| < 2, or a
/// constant series.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(Errc::invalid_argument, "pearson: need two equal-length series of size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw Error(Errc::constant_series, "pearson: constant series has no defined correlation");
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Format ablation
// ---------------------------------------------------------------------------

struct FormatAgreementRow {
  std::string instance_id;
  bool correct_formatted = false;
  bool correct_plain = false;
};

inline void to_json(json& j, const FormatAgreementRow& r) {
  j = json{{"instance_id", r.instance_id}, {"correct_formatted", r.correct_formatted},
           {"correct_plain", r.correct_plain}};
}

struct FormatReport {
  double accuracy_formatted = 0.0;
  double accuracy_plain = 0.0;
  std::vector<FormatAgreementRow> agreement;
};

inline void to_json(json& j, const FormatReport& r) {
  j = json{{"accuracy_formatted", r.accuracy_formatted},
           {"accuracy_plain", r.accuracy_plain},
           {"agreement", r.agreement}};
}

/// Two detection passes differing only in the prompt's trailing format
/// block; seeds and evidence order are held identical.
inline FormatReport run_format_experiment(const std::vector<Instance>& instances,
                                          Backend& backend, const TemplateLibrary& lib,
                                          DetectOptions opts) {
  if (instances.empty())
    throw Error(Errc::invalid_argument, "run_format_experiment: empty instance list");
  opts.mode = PromptMode::formatted;
  const std::vector<DetectionResult> formatted = detect_batch(instances, backend, lib, opts);
  opts.mode = PromptMode::plain;
  const std::vector<DetectionResult> plain = detect_batch(instances, backend, lib, opts);
  FormatReport rep;
  rep.accuracy_formatted = label_accuracy(formatted);
  rep.accuracy_plain = label_accuracy(plain);
  for (size_t i = 0; i < instances.size(); ++i)
    rep.agreement.push_back({instances[i].id, formatted[i].correct, plain[i].correct});
  return rep;
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

/// The eval commands' common report shape. Metrics a given run did not
/// compute serialize as null.
struct Report {
  std::optional<double> accuracy;
  std::optional<double> critique_score_mean;
  std::optional<std::vector<CritiqueScore>> critique_scores;
  std::optional<long> excluded;
  std::optional<double> matching_rate;
  std::optional<Confusion> confusion;
  long n_instances = 0;
  std::optional<long> n_pieces;
};

inline void to_json(json& j, const Report& r) {
  j = json::object();
  j["accuracy"] = r.accuracy ? json(*r.accuracy) : json(nullptr);
  j["critique_score_mean"] = r.critique_score_mean ? json(*r.critique_score_mean) : json(nullptr);
  j["critique_scores"] = r.critique_scores ? json(*r.critique_scores) : json(nullptr);
  j["excluded"] = r.excluded ? json(*r.excluded) : json(nullptr);
  j["evidence_matching_rate"] = r.matching_rate ? json(*r.matching_rate) : json(nullptr);
  if (r.confusion) {
    json m = json::array();
    for (const auto& row : *r.confusion) m.push_back(row);
    j["per_category_confusion"] = m;
  } else {
    j["per_category_confusion"] = nullptr;
  }
  j["n_instances"] = r.n_instances;
  j["n_pieces"] = r.n_pieces ? json(*r.n_pieces) : json(nullptr);
}

// ---------------------------------------------------------------------------
// Agreement CSV
// ---------------------------------------------------------------------------

struct AgreementData {
  std::vector<std::string> instance_ids;
  std::vector<double> human;
  std::vector<double> judge;
};

/// CSV with header instance_id,human_score,judge_score. No quoting support;
/// scores must parse as reals.
inline AgreementData parse_agreement_csv(const std::string& text) {
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  AgreementData out;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(t);
    while (std::getline(row, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 3)
      throw Error(Errc::invalid_argument,
                  "agreement csv line " + std::to_string(line_no) + ": expected 3 columns");
    if (!header_seen) {
      if (cells[0] != "instance_id" || cells[1] != "human_score" || cells[2] != "judge_score")
        throw Error(Errc::invalid_argument,
                    "agreement csv: header must be instance_id,human_score,judge_score");
      header_seen = true;
      continue;
    }
    try {
      out.human.push_back(std::stod(cells[1]));
      out.judge.push_back(std::stod(cells[2]));
    } catch (...) {
      throw Error(Errc::invalid_argument,
                  "agreement csv line " + std::to_string(line_no) + ": non-numeric score");
    }
    out.instance_ids.push_back(cells[0]);
  }
  if (out.instance_ids.empty())
    throw Error(Errc::invalid_argument, "agreement csv: no data rows");
  return out;
}

}  // namespace haluj
