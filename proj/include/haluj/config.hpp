#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "haluj/core.hpp"
#include "haluj/gateway.hpp"
#include "haluj/jsonl.hpp"
#include "haluj/oracle.hpp"
#include "haluj/remote.hpp"

namespace haluj {

// ---------------------------------------------------------------------------
// Config model
// ---------------------------------------------------------------------------

struct BackendEntry {
  BackendSpec spec;
  // oracle-only knobs
  int corrupt_pct = 0;
  CorruptionAxis corrupt_axis = CorruptionAxis::per_instance;
  // scripted-only knob
  std::string script_path;
};

struct Config {
  std::map<std::string, BackendEntry> backends;
  std::uint64_t default_seed = 42;
  int concurrency_limit = 4;
  std::string cache_dir;  // empty = caching off
  std::optional<std::string> templates_dir;
  std::map<std::string, SamplingParams> sampling;  // stage name -> defaults
};

/// Stage sampling defaults, config overrides applied on top.
inline SamplingParams stage_sampling(const Config& cfg, const std::string& stage) {
  SamplingParams base;
  if (stage == "detection") base = SamplingParams::detection_defaults();
  else if (stage == "preference") base = SamplingParams::preference_defaults();
  else if (stage == "synthesis") base = SamplingParams::synthesis_defaults();
  else throw Error(Errc::invalid_argument, "unknown sampling stage: " + stage);
  const auto it = cfg.sampling.find(stage);
  return it == cfg.sampling.end() ? base : it->second;
}

// ---------------------------------------------------------------------------
// TOML-style parsing (flat sections, scalar values)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim_ws(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

/// Values are quoted strings, bare words, or numbers; inline comments only
/// outside quotes.
inline std::string parse_config_value(const std::string& raw, size_t line_no) {
  std::string v = trim_ws(raw);
  if (!v.empty() && v[0] == '"') {
    std::string out;
    bool closed = false;
    for (size_t i = 1; i < v.size(); ++i) {
      if (v[i] == '\\' && i + 1 < v.size()) {
        const char c = v[++i];
        out.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
      } else if (v[i] == '"') {
        const std::string rest = trim_ws(v.substr(i + 1));
        if (!rest.empty() && rest[0] != '#')
          throw Error(Errc::invalid_argument,
                      "config line " + std::to_string(line_no) + ": trailing content after string");
        closed = true;
        break;
      } else {
        out.push_back(v[i]);
      }
    }
    if (!closed)
      throw Error(Errc::invalid_argument,
                  "config line " + std::to_string(line_no) + ": unterminated string");
    return out;
  }
  const auto hash = v.find('#');
  if (hash != std::string::npos) v = trim_ws(v.substr(0, hash));
  if (v.empty())
    throw Error(Errc::invalid_argument, "config line " + std::to_string(line_no) + ": empty value");
  return v;
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& what) {
  try {
    size_t pos = 0;
    const unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (...) {
    throw Error(Errc::invalid_argument, what + ": not an unsigned integer: " + v);
  }
}

inline double parse_real(const std::string& v, const std::string& what) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (...) {
    throw Error(Errc::invalid_argument, what + ": not a number: " + v);
  }
}

inline void apply_backend_key(BackendEntry& e, const std::string& key, const std::string& value,
                              const std::string& name) {
  const std::string what = "backend." + name + "." + key;
  if (key == "kind") {
    if (value == "remote") e.spec.kind = BackendKind::remote;
    else if (value == "scripted") e.spec.kind = BackendKind::scripted;
    else if (value == "oracle") e.spec.kind = BackendKind::oracle;
    else throw Error(Errc::invalid_argument, what + ": unknown kind " + value);
  } else if (key == "model") {
    e.spec.model = value;
  } else if (key == "base_url") {
    e.spec.base_url = value;
  } else if (key == "auth_env_var") {
    e.spec.auth_env_var = value;
  } else if (key == "script") {
    e.script_path = value;
  } else if (key == "corrupt_pct") {
    e.corrupt_pct = static_cast<int>(parse_u64(value, what));
  } else if (key == "corrupt_axis") {
    e.corrupt_axis = parse_corruption_axis(value);
  } else {
    throw Error(Errc::invalid_argument, what + ": unknown key");
  }
}

inline void apply_sampling_key(SamplingParams& p, const std::string& key, const std::string& value,
                               const std::string& stage) {
  const std::string what = "sampling." + stage + "." + key;
  if (key == "temperature") p.temperature = parse_real(value, what);
  else if (key == "top_p") p.top_p = parse_real(value, what);
  else if (key == "max_tokens") p.max_tokens = static_cast<int>(parse_u64(value, what));
  else if (key == "n_samples") p.n_samples = static_cast<int>(parse_u64(value, what));
  else throw Error(Errc::invalid_argument, what + ": unknown key");
}

}  // namespace detail

inline Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  std::string section;  // "", "backend.NAME", or "sampling.STAGE"
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim_ws(line);
    if (t.empty() || t[0] == '#') continue;
    if (t[0] == '[') {
      if (t.back() != ']')
        throw Error(Errc::invalid_argument,
                    "config line " + std::to_string(line_no) + ": malformed section header");
      section = detail::trim_ws(t.substr(1, t.size() - 2));
      if (section.rfind("backend.", 0) != 0 && section.rfind("sampling.", 0) != 0)
        throw Error(Errc::invalid_argument,
                    "config line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::invalid_argument,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim_ws(t.substr(0, eq));
    const std::string value = detail::parse_config_value(t.substr(eq + 1), line_no);
    if (key.empty())
      throw Error(Errc::invalid_argument, "config line " + std::to_string(line_no) + ": empty key");

    if (section.empty()) {
      if (key == "default_seed") cfg.default_seed = detail::parse_u64(value, key);
      else if (key == "concurrency_limit")
        cfg.concurrency_limit = static_cast<int>(detail::parse_u64(value, key));
      else if (key == "cache_dir") cfg.cache_dir = value;
      else if (key == "templates_dir") cfg.templates_dir = value;
      else throw Error(Errc::invalid_argument,
                       "config line " + std::to_string(line_no) + ": unknown key " + key);
    } else if (section.rfind("backend.", 0) == 0) {
      const std::string name = section.substr(8);
      detail::apply_backend_key(cfg.backends[name], key, value, name);
    } else {
      const std::string stage = section.substr(9);
      auto [it, inserted] = cfg.sampling.try_emplace(stage, stage_sampling(Config{}, stage));
      detail::apply_sampling_key(it->second, key, value, stage);
    }
  }
  if (cfg.concurrency_limit < 1)
    throw Error(Errc::invalid_argument, "concurrency_limit must be >= 1");
  return cfg;
}

/// HALU_* environment variables override file values.
inline void apply_env_overrides(Config& cfg, const char* (*get_env)(const char*) = nullptr) {
  const auto get = [&](const char* name) -> const char* {
    return get_env ? get_env(name) : std::getenv(name);
  };
  if (const char* v = get("HALU_DEFAULT_SEED"))
    cfg.default_seed = detail::parse_u64(v, "HALU_DEFAULT_SEED");
  if (const char* v = get("HALU_CONCURRENCY_LIMIT")) {
    cfg.concurrency_limit = static_cast<int>(detail::parse_u64(v, "HALU_CONCURRENCY_LIMIT"));
    if (cfg.concurrency_limit < 1)
      throw Error(Errc::invalid_argument, "HALU_CONCURRENCY_LIMIT must be >= 1");
  }
  if (const char* v = get("HALU_CACHE_DIR")) cfg.cache_dir = v;
  if (const char* v = get("HALU_TEMPLATES_DIR")) cfg.templates_dir = std::string(v);
}

/// Resolution order: --config path, then HALU_CONFIG, then built-in
/// defaults. Env overrides land last either way.
inline Config load_config(const std::optional<std::string>& config_path) {
  Config cfg;
  std::optional<std::string> path = config_path;
  if (!path)
    if (const char* v = std::getenv("HALU_CONFIG")) path = std::string(v);
  if (path) cfg = parse_config(jsonl::read_file(*path));
  apply_env_overrides(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Backend construction
// ---------------------------------------------------------------------------

/// Completion cache laid over another backend. complete_n stores each draw
/// under its sample index, so a fully-cached batch never touches the inner
/// backend and a partial miss re-fetches the whole batch in one call.
class CachedBackend final : public Backend {
 public:
  CachedBackend(std::unique_ptr<Backend> inner, std::filesystem::path cache_dir)
      : inner_(std::move(inner)), cache_(std::move(cache_dir)) {}

  const BackendSpec& spec() const override { return inner_->spec(); }

  std::string complete(const CompletionRequest& req) override {
    return cached_complete(cache_, *inner_, req).first;
  }

  std::vector<std::string> complete_n(const CompletionRequest& req, int n) override {
    std::vector<std::string> out(static_cast<size_t>(n));
    bool all_hit = true;
    for (int i = 0; i < n && all_hit; ++i) {
      CompletionRequest probe = req;
      probe.sample_index = i;
      const auto hit = cache_.lookup(cache_key(inner_->spec(), probe));
      if (hit) out[static_cast<size_t>(i)] = *hit;
      else all_hit = false;
    }
    if (all_hit) return out;
    out = inner_->complete_n(req, n);
    for (int i = 0; i < n; ++i) {
      CompletionRequest probe = req;
      probe.sample_index = i;
      cache_.store(cache_key(inner_->spec(), probe), out[static_cast<size_t>(i)]);
    }
    return out;
  }

 private:
  std::unique_ptr<Backend> inner_;
  CompletionCache cache_;
};

struct BackendHandle {
  std::unique_ptr<Backend> backend;
  OracleBackend* oracle = nullptr;  // non-null when the backend is an oracle
  bool remote = false;
};

namespace detail {

inline BackendHandle make_oracle(int pct, CorruptionAxis axis) {
  CorruptionSchedule sched;
  sched.pct = pct;
  sched.axis = axis;
  auto oracle = std::make_unique<OracleBackend>(sched);
  BackendHandle h;
  h.oracle = oracle.get();
  h.backend = std::move(oracle);
  return h;
}

inline BackendHandle build_backend(const BackendEntry& entry) {
  BackendHandle h;
  switch (entry.spec.kind) {
    case BackendKind::oracle:
      return make_oracle(entry.corrupt_pct, entry.corrupt_axis);
    case BackendKind::scripted:
      if (entry.script_path.empty())
        throw Error(Errc::invalid_argument, "scripted backend needs script = \"file.jsonl\"");
      h.backend = std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(entry.script_path));
      return h;
    case BackendKind::remote: {
      BackendSpec spec = entry.spec;
      spec.validate();
      h.backend = std::make_unique<RemoteBackend>(spec);
      h.remote = true;
      return h;
    }
  }
  throw Error(Errc::invalid_argument, "unknown backend kind");
}

}  // namespace detail

/// Resolve a --backend argument: a name from config, or the inline forms
/// "oracle[:PCT[:AXIS]]" and "scripted:FILE". Remote backends get the
/// completion cache when cache_dir is set; deterministic backends run bare.
inline BackendHandle resolve_backend(const Config& cfg, const std::string& name) {
  BackendHandle h;
  const auto it = cfg.backends.find(name);
  if (it != cfg.backends.end()) {
    h = detail::build_backend(it->second);
  } else if (name == "oracle" || name.rfind("oracle:", 0) == 0) {
    int pct = 0;
    CorruptionAxis axis = CorruptionAxis::per_instance;
    if (name.size() > 7) {
      const std::string rest = name.substr(7);
      const auto colon = rest.find(':');
      pct = static_cast<int>(detail::parse_u64(rest.substr(0, colon), "oracle corrupt pct"));
      if (colon != std::string::npos) axis = parse_corruption_axis(rest.substr(colon + 1));
    }
    h = detail::make_oracle(pct, axis);
  } else if (name.rfind("scripted:", 0) == 0) {
    h.backend =
        std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(name.substr(9)));
  } else {
    throw Error(Errc::invalid_argument, "backend not found: " + name);
  }
  if (h.remote && !cfg.cache_dir.empty())
    h.backend = std::make_unique<CachedBackend>(std::move(h.backend), cfg.cache_dir);
  return h;
}

}  // namespace haluj
