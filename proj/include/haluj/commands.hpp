#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "haluj/config.hpp"
#include "haluj/core.hpp"
#include "haluj/detector.hpp"
#include "haluj/evaluator.hpp"
#include "haluj/jsonl.hpp"
#include "haluj/preference.hpp"
#include "haluj/synthesizer.hpp"
#include "haluj/templates.hpp"

namespace haluj {

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

inline TemplateLibrary load_templates(const Config& cfg) {
  return cfg.templates_dir ? TemplateLibrary::with_overrides(*cfg.templates_dir)
                           : TemplateLibrary();
}

namespace detail {

template <typename T>
inline std::vector<T> read_input_records(const std::string& path, const char* what) {
  try {
    return jsonl::read_records<T>(path);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::invalid_argument, std::string(what) + ": " + e.what());
  }
}

inline void register_with_oracle(const BackendHandle& h, const std::vector<Instance>& instances) {
  if (!h.oracle) return;
  std::vector<std::string> ids;
  for (const auto& inst : instances) ids.push_back(inst.id);
  h.oracle->register_instance_ids(ids);
}

inline void register_sources_with_oracle(const BackendHandle& h,
                                         const std::vector<SourceRecord>& sources) {
  if (!h.oracle) return;
  std::vector<std::string> ids;
  for (const auto& s : sources) ids.push_back(s.id);
  h.oracle->register_instance_ids(ids);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

struct SynthesizeArgs {
  std::string input;
  std::string out_dir;
  std::string backend;
  std::optional<std::uint64_t> seed;
  bool review_sidecar = false;
  bool neutral_misleads = false;
  bool single_evidence = false;
};

inline int run_synthesize(const Config& cfg, const SynthesizeArgs& args, std::ostream& out,
                          std::ostream& err) {
  const auto sources = detail::read_input_records<SourceRecord>(args.input, "source records");
  if (sources.empty()) throw Error(Errc::invalid_argument, "source records: empty input");
  BackendHandle handle = resolve_backend(cfg, args.backend);
  detail::register_sources_with_oracle(handle, sources);
  const TemplateLibrary lib = load_templates(cfg);
  const std::uint64_t seed = args.seed.value_or(cfg.default_seed);

  SynthesisOptions opts;
  opts.neutral_misleads = args.neutral_misleads;
  opts.params = stage_sampling(cfg, "synthesis");
  opts.concurrency_limit = cfg.concurrency_limit;

  SynthesisOutput result;
  if (args.single_evidence) {
    for (const auto& src : sources) {
      Instance inst;
      inst.id = src.id;
      inst.claim = src.claim;
      inst.label = src.label;
      inst.source = Source::single_evidence;
      inst.evidence.push_back({1, src.evidence_text, EvidenceCategory::HighlyRelated});
      validate_instance(inst);
      result.instances.push_back(std::move(inst));
      result.sft.push_back(
          synthesize_single_evidence_critique(src, *handle.backend, lib, opts, result.audit));
    }
    result.stats.instances = result.instances.size();
    result.stats.n_r = static_cast<long>(result.instances.size());
    result.stats.sft_records = result.sft.size();
  } else {
    result = run_synthesis(sources, *handle.backend, lib, seed, opts);
  }

  const std::filesystem::path dir(args.out_dir);
  jsonl::write_records(dir / "instances.jsonl", result.instances);
  jsonl::write_records(dir / "sft.jsonl", result.sft);
  jsonl::write_records(dir / "dpo_pool.jsonl", result.dpo_pool);
  jsonl::write_records(dir / "audit.jsonl", result.audit);
  if (args.review_sidecar) jsonl::write_records(dir / "review.jsonl", result.review);

  out << json(result.stats).dump() << "\n";
  if (result.stats.failed_sources > 0) {
    err << json{{"error", "synthesis_failures"},
                {"stage", "synthesize"},
                {"detail", std::to_string(result.stats.failed_sources) + " of " +
                               std::to_string(sources.size()) + " sources failed"}}
               .dump()
        << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

struct DetectArgs {
  std::string instances;
  std::string backend;
  std::string mode = "formatted";  // formatted | plain
  std::string order = "stored";    // stored | shuffled
  std::optional<std::uint64_t> seed;
  std::string out;
};

inline PromptMode parse_prompt_mode(const std::string& s) {
  if (s == "formatted") return PromptMode::formatted;
  if (s == "plain") return PromptMode::plain;
  throw Error(Errc::invalid_argument, "mode must be formatted or plain, got " + s);
}

inline EvidenceOrder parse_evidence_order(const std::string& s) {
  if (s == "stored") return EvidenceOrder::as_stored;
  if (s == "shuffled") return EvidenceOrder::shuffled;
  throw Error(Errc::invalid_argument, "order must be stored or shuffled, got " + s);
}

inline int run_detect(const Config& cfg, const DetectArgs& args, std::ostream& out,
                      std::ostream& err) {
  (void)err;
  const auto instances = detail::read_input_records<Instance>(args.instances, "instances");
  if (instances.empty()) throw Error(Errc::invalid_argument, "instances: empty input");
  for (const auto& inst : instances) validate_instance(inst);
  BackendHandle handle = resolve_backend(cfg, args.backend);
  detail::register_with_oracle(handle, instances);
  const TemplateLibrary lib = load_templates(cfg);

  DetectOptions opts;
  opts.mode = parse_prompt_mode(args.mode);
  opts.order = parse_evidence_order(args.order);
  opts.seed = args.seed.value_or(cfg.default_seed);
  opts.params = stage_sampling(cfg, "detection");
  opts.concurrency_limit = cfg.concurrency_limit;

  const std::vector<DetectionResult> results = detect_batch(instances, *handle.backend, lib, opts);
  jsonl::write_records(args.out, results);
  out << json{{"n_instances", results.size()}, {"accuracy", label_accuracy(results)}}.dump()
      << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// prefs
// ---------------------------------------------------------------------------

struct PrefsArgs {
  std::string instances;
  std::string backend;
  std::optional<int> n;
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::string out;
};

inline int run_prefs(const Config& cfg, const PrefsArgs& args, std::ostream& out,
                     std::ostream& err) {
  (void)err;
  const auto instances = detail::read_input_records<Instance>(args.instances, "instances");
  if (instances.empty()) throw Error(Errc::invalid_argument, "instances: empty input");
  for (const auto& inst : instances) validate_instance(inst);
  BackendHandle handle = resolve_backend(cfg, args.backend);
  detail::register_with_oracle(handle, instances);
  const TemplateLibrary lib = load_templates(cfg);

  DpoOptions opts;
  opts.params = stage_sampling(cfg, "preference");
  if (args.n) opts.params.n_samples = *args.n;
  if (args.temperature) opts.params.temperature = *args.temperature;
  if (args.top_p) opts.params.top_p = *args.top_p;
  opts.concurrency_limit = cfg.concurrency_limit;

  const DpoDataset dataset = build_dpo_dataset(instances, *handle.backend, lib, opts);
  jsonl::write_records(args.out, dataset.pairs);
  const std::filesystem::path skips_path = std::filesystem::path(args.out).string() + ".skips.jsonl";
  jsonl::write_records(skips_path, dataset.skips);
  out << json(dataset.stats).dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string kind;  // labels | critique | matching | format | agreement
  std::string results;
  std::string instances;
  std::string backend;   // judge or detection backend, kind-dependent
  std::string csv;       // agreement input
  std::string mode = "formatted";
  std::string order = "stored";
  std::optional<std::uint64_t> seed;
  bool macro = false;
  std::string out;  // optional report file
};

namespace detail {

inline void emit_report(const json& report, const std::string& out_path, std::ostream& out) {
  out << report.dump() << "\n";
  if (!out_path.empty()) jsonl::atomic_write(out_path, report.dump() + "\n");
}

/// Detection results joined to their presented-form instances.
struct JoinedResults {
  std::vector<DetectionResult> results;
  std::vector<Instance> presented;
};

inline JoinedResults join_results(const std::string& results_path,
                                  const std::string& instances_path) {
  JoinedResults out;
  out.results = read_input_records<DetectionResult>(results_path, "detection results");
  const auto instances = read_input_records<Instance>(instances_path, "instances");
  for (const auto& r : out.results) {
    const Instance inst = find_instance(instances, r.instance_id);
    out.presented.push_back(apply_presentation(inst, r.presentation));
  }
  return out;
}

}  // namespace detail

inline int run_eval(const Config& cfg, const EvalArgs& args, std::ostream& out,
                    std::ostream& err) {
  (void)err;
  if (args.kind == "labels") {
    const auto results =
        detail::read_input_records<DetectionResult>(args.results, "detection results");
    Report rep;
    rep.accuracy = label_accuracy(results);
    rep.n_instances = static_cast<long>(results.size());
    detail::emit_report(json(rep), args.out, out);
    return 0;
  }
  if (args.kind == "critique") {
    const auto joined = detail::join_results(args.results, args.instances);
    BackendHandle judge = resolve_backend(cfg, args.backend);
    const TemplateLibrary lib = load_templates(cfg);
    JudgeOptions opts;
    opts.mode = parse_prompt_mode(args.mode);
    opts.params = stage_sampling(cfg, "detection");
    opts.concurrency_limit = cfg.concurrency_limit;
    std::vector<Instance> instances =
        detail::read_input_records<Instance>(args.instances, "instances");
    const CritiqueScoring scoring =
        score_critiques(joined.results, instances, *judge.backend, lib, opts);
    Report rep;
    rep.critique_score_mean = scoring.mean;
    rep.critique_scores = scoring.scores;
    rep.excluded = static_cast<long>(scoring.excluded);
    rep.n_instances = static_cast<long>(joined.results.size());
    detail::emit_report(json(rep), args.out, out);
    return 0;
  }
  if (args.kind == "matching") {
    const auto joined = detail::join_results(args.results, args.instances);
    BackendHandle judge = resolve_backend(cfg, args.backend);
    const TemplateLibrary lib = load_templates(cfg);
    JudgeOptions opts;
    opts.params = stage_sampling(cfg, "detection");
    opts.concurrency_limit = cfg.concurrency_limit;
    std::vector<CategoryMap> maps(joined.results.size());
    parallel_for(joined.results.size(), opts.concurrency_limit, [&](size_t i) {
      const DetectionResult& r = joined.results[i];
      const std::string critique =
          !r.parsed.reasoning.empty() ? r.parsed.reasoning : r.raw;
      maps[i] = extract_category_map(joined.presented[i], critique, *judge.backend, lib, opts);
    });
    const MatchingReport matching = evidence_matching_rate(maps, joined.presented);
    Report rep;
    rep.matching_rate = args.macro ? matching.macro_rate : matching.rate;
    rep.confusion = matching.confusion;
    rep.n_instances = static_cast<long>(joined.results.size());
    rep.n_pieces = matching.n_pieces;
    json j(rep);
    j["evidence_matching_rate_micro"] = matching.rate;
    j["evidence_matching_rate_macro"] = matching.macro_rate;
    j["unmentioned_pieces"] = matching.unmentioned;
    detail::emit_report(j, args.out, out);
    return 0;
  }
  if (args.kind == "format") {
    const auto instances = detail::read_input_records<Instance>(args.instances, "instances");
    BackendHandle handle = resolve_backend(cfg, args.backend);
    detail::register_with_oracle(handle, instances);
    const TemplateLibrary lib = load_templates(cfg);
    DetectOptions opts;
    opts.order = parse_evidence_order(args.order);
    opts.seed = args.seed.value_or(cfg.default_seed);
    opts.params = stage_sampling(cfg, "detection");
    opts.concurrency_limit = cfg.concurrency_limit;
    const FormatReport rep = run_format_experiment(instances, *handle.backend, lib, opts);
    detail::emit_report(json(rep), args.out, out);
    return 0;
  }
  if (args.kind == "agreement") {
    const AgreementData data = parse_agreement_csv(jsonl::read_file(args.csv));
    const double r = pearson(data.human, data.judge);
    detail::emit_report(json{{"pearson", r}, {"n", data.instance_ids.size()}}, args.out, out);
    return 0;
  }
  throw Error(Errc::invalid_argument, "unknown eval kind: " + args.kind);
}

// ---------------------------------------------------------------------------
// Error envelope
// ---------------------------------------------------------------------------

/// Uniform outermost handler: machine-readable error JSON on stderr, exit 2
/// for usage/input problems, 1 for runtime failures.
template <typename Fn>
inline int with_error_envelope(const char* stage, std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << json{{"error", errc_name(e.code())}, {"stage", stage}, {"detail", e.what()}}.dump()
        << "\n";
    return (e.code() == Errc::invalid_argument || e.code() == Errc::io_error) ? 2 : 1;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"stage", stage}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  }
}

}  // namespace haluj
