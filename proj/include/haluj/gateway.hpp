#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "haluj/core.hpp"
#include "haluj/jsonl.hpp"
#include "haluj/rng.hpp"

namespace haluj {

enum class BackendKind { remote, scripted, oracle };

inline std::string_view backend_kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::remote:   return "remote";
    case BackendKind::scripted: return "scripted";
    case BackendKind::oracle:   return "oracle";
  }
  return "";
}

struct BackendSpec {
  BackendKind kind = BackendKind::oracle;
  std::string model;
  std::string base_url;      // remote only
  std::string auth_env_var;  // remote only

  void validate() const {
    if (kind == BackendKind::remote && (base_url.empty() || auth_env_var.empty()))
      throw Error(Errc::invalid_argument, "remote backend requires base_url and auth_env_var");
  }
};

/// Structured side channel accompanying a prompt. Deterministic backends act
/// on these fields only; they never parse the prompt's natural language.
struct RequestMeta {
  std::string task;        // detect, synth_golden, reformat_golden, score,
                           // extract, gen_partial, gen_misleading, filter, expand
  std::string instance_id;
  std::optional<Label> gold;
  std::vector<EvidenceCategory> categories;  // presented order
  std::vector<bool> misleading;              // presented order
  std::string claim;
  std::string evidence_text;
};

struct CompletionRequest {
  std::string prompt;
  SamplingParams params;
  int sample_index = 0;
  RequestMeta meta;
};

/// A text-completion backend. complete_n's default draws sequentially with
/// increasing sample_index; backends with native multi-sample support
/// override it.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const CompletionRequest& req) = 0;
  virtual const BackendSpec& spec() const = 0;

  virtual std::vector<std::string> complete_n(const CompletionRequest& req, int n) {
    if (n < 1) throw Error(Errc::invalid_argument, "complete_n requires n >= 1");
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      CompletionRequest r = req;
      r.sample_index = i;
      try {
        out.push_back(complete(r));
      } catch (const Error& e) {
        std::ostringstream msg;
        msg << "batch aborted at index " << i << " (indices 0.." << i - 1
            << " succeeded): " << e.what();
        throw Error(e.code(), msg.str());
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

/// Table-driven test double: exact (prompt, sample_index) entries plus
/// any-index fallbacks. Missing entry raises ScriptMiss.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::string model = "scripted") {
    spec_.kind = BackendKind::scripted;
    spec_.model = std::move(model);
  }

  void add(const std::string& prompt, std::string completion) {
    any_index_[prompt] = std::move(completion);
  }
  void add(const std::string& prompt, int sample_index, std::string completion) {
    indexed_[{prompt, sample_index}] = std::move(completion);
  }

  /// Load entries from JSONL: {"prompt", "completion", "sample_index"?}.
  static ScriptedBackend from_file(const std::filesystem::path& path) {
    ScriptedBackend b("scripted:" + path.filename().string());
    for (const auto& j : jsonl::read_lines(path)) {
      if (j.contains("sample_index"))
        b.add(j.at("prompt").get<std::string>(), j.at("sample_index").get<int>(),
              j.at("completion").get<std::string>());
      else
        b.add(j.at("prompt").get<std::string>(), j.at("completion").get<std::string>());
    }
    return b;
  }

  std::string complete(const CompletionRequest& req) override {
    if (auto it = indexed_.find({req.prompt, req.sample_index}); it != indexed_.end())
      return it->second;
    if (auto it = any_index_.find(req.prompt); it != any_index_.end()) return it->second;
    throw Error(Errc::script_miss,
                "no scripted entry for sample " + std::to_string(req.sample_index) +
                    " of prompt: " + req.prompt.substr(0, 80));
  }

  const BackendSpec& spec() const override { return spec_; }

 private:
  BackendSpec spec_;
  std::map<std::pair<std::string, int>, std::string> indexed_;
  std::map<std::string, std::string> any_index_;
};

// ---------------------------------------------------------------------------
// Retry policy
// ---------------------------------------------------------------------------

/// Exponential backoff with deterministic ±jitter derived from the request
/// digest, so retry timing is reproducible and injectable in tests.
struct RetryPolicy {
  int max_attempts = 5;
  int base_delay_ms = 1000;
  int jitter_pct = 20;

  int delay_ms(std::uint64_t request_digest, int attempt) const {
    double d = static_cast<double>(base_delay_ms);
    for (int i = 1; i < attempt; ++i) d *= 2;
    const std::uint64_t h = rng::fnv1a64_u64(static_cast<std::uint64_t>(attempt),
                                             rng::fnv1a64_u64(request_digest));
    const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
    const double factor = 1.0 + (2.0 * unit - 1.0) * (jitter_pct / 100.0);
    return static_cast<int>(d * factor);
  }
};

using SleepFn = std::function<void(int /*ms*/)>;

inline void default_sleep(int ms) {
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

// ---------------------------------------------------------------------------
// Completion cache
// ---------------------------------------------------------------------------

/// Request identity for caching: any change to backend, sampling knobs,
/// prompt, or sample index yields a different key.
inline std::uint64_t cache_key(const BackendSpec& spec, const CompletionRequest& req) {
  std::ostringstream canon;
  canon << backend_kind_name(spec.kind) << '\x1f' << spec.model << '\x1f'
        << req.params.temperature << '\x1f' << req.params.top_p << '\x1f'
        << req.params.max_tokens << '\x1f' << req.sample_index << '\x1f' << req.prompt;
  return rng::fnv1a64(canon.str());
}

/// One file per key: a JSON header line {digest, checksum, body_len, created}
/// followed by the raw completion bytes. A corrupt entry is a miss with a
/// warning, never an error.
class CompletionCache {
 public:
  explicit CompletionCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<std::string> lookup(std::uint64_t key) const {
    const auto path = entry_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string header_line;
    if (!std::getline(in, header_line)) return corrupt(path);
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded() || !header.contains("checksum") || !header.contains("body_len"))
      return corrupt(path);
    std::string body(static_cast<size_t>(header.at("body_len").get<std::uint64_t>()), '\0');
    in.read(body.data(), static_cast<std::streamsize>(body.size()));
    if (in.gcount() != static_cast<std::streamsize>(body.size())) return corrupt(path);
    if (rng::fnv1a64(body) != header.at("checksum").get<std::uint64_t>()) return corrupt(path);
    return body;
  }

  void store(std::uint64_t key, const std::string& body) const {
    json header{{"digest", key},
                {"checksum", rng::fnv1a64(body)},
                {"body_len", body.size()},
                {"created", static_cast<std::int64_t>(
                                std::chrono::duration_cast<std::chrono::seconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count())}};
    jsonl::atomic_write(entry_path(key), header.dump() + "\n" + body);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(std::uint64_t key) const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(key));
    return dir_ / (std::string(buf) + ".completion");
  }

  std::optional<std::string> corrupt(const std::filesystem::path& path) const {
    std::cerr << "warning: corrupt cache entry " << path.string() << " (treated as miss)\n";
    return std::nullopt;
  }

  std::filesystem::path dir_;
};

/// Read-through cache wrapper. Returns (completion, hit).
inline std::pair<std::string, bool> cached_complete(const CompletionCache& cache,
                                                    Backend& backend,
                                                    const CompletionRequest& req) {
  const std::uint64_t key = cache_key(backend.spec(), req);
  if (auto stored = cache.lookup(key)) return {std::move(*stored), true};
  std::string fresh = backend.complete(req);
  cache.store(key, fresh);
  return {std::move(fresh), false};
}

// ---------------------------------------------------------------------------
// Bounded parallel map
// ---------------------------------------------------------------------------

/// Run fn(i) for i in [0, n) on up to `limit` threads. Results land in index
/// order; the first exception is rethrown after all workers finish.
template <typename Fn>
void parallel_for(size_t n, int limit, Fn&& fn) {
  if (n == 0) return;
  const int workers = std::max(1, std::min<int>(limit, static_cast<int>(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto run = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace haluj
