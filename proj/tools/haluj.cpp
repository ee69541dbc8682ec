// haluj — synthesize ME-FEVER-style instances, run evidence-categorized
// detection, build DPO preference pairs, and evaluate the results.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "haluj/haluj.hpp"

namespace {

struct GlobalArgs {
  std::optional<std::string> config_path;
};

haluj::Config load_or_die(const GlobalArgs& g) { return haluj::load_config(g.config_path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-evidence hallucination-detection pipeline"};
  app.require_subcommand(1);
  GlobalArgs global;
  app.add_option("--config", global.config_path, "Config file (TOML-style); HALU_CONFIG also works");

  // --- synthesize ---------------------------------------------------------
  haluj::SynthesizeArgs synth;
  std::optional<std::uint64_t> synth_seed;
  auto* cmd_synth = app.add_subcommand("synthesize", "Curate multi-evidence instances and SFT data");
  cmd_synth->add_option("--input", synth.input, "Source records JSONL")->required();
  cmd_synth->add_option("--out", synth.out_dir, "Output directory")->required();
  cmd_synth->add_option("--backend", synth.backend, "Backend name or inline spec")->required();
  cmd_synth->add_option("--seed", synth_seed, "Base seed (default: config default_seed)");
  cmd_synth->add_flag("--review-sidecar", synth.review_sidecar,
                      "Also write review.jsonl with rejected irrelevant candidates");
  cmd_synth->add_flag("--neutral-misleads", synth.neutral_misleads,
                      "Generate misleading evidence for Neutral sources too (both directions)");
  cmd_synth->add_flag("--single-evidence", synth.single_evidence,
                      "Single-evidence critique mode: one golden critique per source, no curation");

  // --- detect --------------------------------------------------------------
  haluj::DetectArgs detect;
  std::optional<std::uint64_t> detect_seed;
  auto* cmd_detect = app.add_subcommand("detect", "Run detection over stored instances");
  cmd_detect->add_option("--instances", detect.instances, "Instances JSONL")->required();
  cmd_detect->add_option("--backend", detect.backend, "Backend name or inline spec")->required();
  cmd_detect->add_option("--mode", detect.mode, "formatted | plain")
      ->default_val("formatted")
      ->check(CLI::IsMember({"formatted", "plain"}));
  cmd_detect->add_option("--order", detect.order, "stored | shuffled")
      ->default_val("stored")
      ->check(CLI::IsMember({"stored", "shuffled"}));
  cmd_detect->add_option("--seed", detect_seed, "Shuffle seed (default: config default_seed)");
  cmd_detect->add_option("--out", detect.out, "Results JSONL")->required();

  // --- prefs ---------------------------------------------------------------
  haluj::PrefsArgs prefs;
  std::optional<int> prefs_n;
  std::optional<double> prefs_temp, prefs_top_p;
  auto* cmd_prefs = app.add_subcommand("prefs", "Sample candidates and build DPO preference pairs");
  cmd_prefs->add_option("--instances", prefs.instances, "Instances JSONL (dpo_pool)")->required();
  cmd_prefs->add_option("--backend", prefs.backend, "Backend name or inline spec")->required();
  cmd_prefs->add_option("--n", prefs_n, "Samples per instance (default 30)");
  cmd_prefs->add_option("--temperature", prefs_temp, "Sampling temperature (default 1.0)");
  cmd_prefs->add_option("--top-p", prefs_top_p, "Nucleus cutoff (default 0.9)");
  cmd_prefs->add_option("--out", prefs.out, "Pairs JSONL; skips land in <out>.skips.jsonl")
      ->required();

  // --- eval ----------------------------------------------------------------
  haluj::EvalArgs eval;
  std::optional<std::uint64_t> eval_seed;
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate detection outputs");
  cmd_eval->add_option("kind", eval.kind, "labels | critique | matching | format | agreement")
      ->required()
      ->check(CLI::IsMember({"labels", "critique", "matching", "format", "agreement"}));
  cmd_eval->add_option("--results", eval.results, "Detection results JSONL");
  cmd_eval->add_option("--instances", eval.instances, "Instances JSONL");
  cmd_eval->add_option("--backend", eval.backend, "Judge/detection backend");
  cmd_eval->add_option("--csv", eval.csv, "Agreement CSV (instance_id,human_score,judge_score)");
  cmd_eval->add_option("--mode", eval.mode, "Prompt mode the results were produced with")
      ->default_val("formatted")
      ->check(CLI::IsMember({"formatted", "plain"}));
  cmd_eval->add_option("--order", eval.order, "Evidence order for eval format")
      ->default_val("stored")
      ->check(CLI::IsMember({"stored", "shuffled"}));
  cmd_eval->add_option("--seed", eval_seed, "Seed for eval format (default: config default_seed)");
  cmd_eval->add_flag("--macro", eval.macro, "Report macro-averaged matching rate as the headline");
  cmd_eval->add_option("--out", eval.out, "Also write the report JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << haluj::json{{"error", "usage"},
                             {"stage", "cli"},
                             {"detail", e.what()}}
                     .dump()
              << "\n";
    return 2;
  }

  const char* stage = "cli";
  if (cmd_synth->parsed()) stage = "synthesize";
  else if (cmd_detect->parsed()) stage = "detect";
  else if (cmd_prefs->parsed()) stage = "prefs";
  else if (cmd_eval->parsed()) stage = "eval";

  return haluj::with_error_envelope(stage, std::cerr, [&]() -> int {
    const haluj::Config cfg = load_or_die(global);
    if (cmd_synth->parsed()) {
      synth.seed = synth_seed;
      return haluj::run_synthesize(cfg, synth, std::cout, std::cerr);
    }
    if (cmd_detect->parsed()) {
      detect.seed = detect_seed;
      return haluj::run_detect(cfg, detect, std::cout, std::cerr);
    }
    if (cmd_prefs->parsed()) {
      prefs.n = prefs_n;
      prefs.temperature = prefs_temp;
      prefs.top_p = prefs_top_p;
      return haluj::run_prefs(cfg, prefs, std::cout, std::cerr);
    }
    eval.seed = eval_seed;
    return haluj::run_eval(cfg, eval, std::cout, std::cerr);
  });
}
