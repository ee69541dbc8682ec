#pragma once

#include <cstdlib>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#ifdef HALUJ_WITH_OPENSSL
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#endif
#include <httplib.h>

#include "haluj/gateway.hpp"

namespace haluj {

/// Chat-completion HTTP client: single user message in, first choice's
/// message content out. Transient failures (connect errors, 408/429/5xx)
/// retry with jittered exponential backoff; the sleep is injectable so tests
/// run without wall-clock delays.
class RemoteBackend : public Backend {
 public:
  RemoteBackend(BackendSpec spec, RetryPolicy retry = {}, SleepFn sleep = default_sleep)
      : spec_(std::move(spec)), retry_(retry), sleep_(std::move(sleep)) {
    spec_.validate();
    split_base_url();
  }

  std::string complete(const CompletionRequest& req) override {
    return post_chat(req, 1).at(0);
  }

  std::vector<std::string> complete_n(const CompletionRequest& req, int n) override {
    if (n < 1) throw Error(Errc::invalid_argument, "complete_n requires n >= 1");
    return post_chat(req, n);
  }

  const BackendSpec& spec() const override { return spec_; }

 private:
  static bool transient_status(int status) {
    return status == 408 || status == 429 || status >= 500;
  }

  std::string auth_token() const {
    const char* v = std::getenv(spec_.auth_env_var.c_str());
    if (!v || !*v)
      throw Error(Errc::auth_missing, "environment variable " + spec_.auth_env_var + " is not set");
    return v;
  }

  void split_base_url() {
    const auto scheme_end = spec_.base_url.find("://");
    const size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = spec_.base_url.find('/', host_start);
    if (path_start == std::string::npos) {
      origin_ = spec_.base_url;
    } else {
      origin_ = spec_.base_url.substr(0, path_start);
      path_prefix_ = spec_.base_url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
  }

  std::vector<std::string> post_chat(const CompletionRequest& req, int n) {
    const std::string token = auth_token();
    const json body{{"model", spec_.model},
                    {"messages", json::array({json{{"role", "user"}, {"content", req.prompt}}})},
                    {"temperature", req.params.temperature},
                    {"top_p", req.params.top_p},
                    {"max_tokens", req.params.max_tokens},
                    {"n", n}};
    const std::string payload = body.dump();
    const std::uint64_t digest = cache_key(spec_, req);
    std::string last_detail = "no attempt made";

    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
      if (attempt > 1) sleep_(retry_.delay_ms(digest, attempt - 1));
      httplib::Client cli(origin_);
      cli.set_connection_timeout(30);
      cli.set_read_timeout(120);
      httplib::Headers headers{{"Authorization", "Bearer " + token}};
      auto res = cli.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
      if (!res) {
        last_detail = "connection failure (" + httplib::to_string(res.error()) + ")";
        continue;
      }
      if (res->status == 200) return extract_choices(res->body, n);
      last_detail = "HTTP " + std::to_string(res->status);
      if (!transient_status(res->status))
        throw Error(Errc::backend_unavailable, origin_ + ": " + last_detail + ": " + res->body.substr(0, 200));
    }
    throw Error(Errc::backend_unavailable,
                origin_ + ": retries exhausted after " + std::to_string(retry_.max_attempts) +
                    " attempts; last error: " + last_detail);
  }

  static std::vector<std::string> extract_choices(const std::string& body, int n) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j.at("choices").is_array())
      throw Error(Errc::backend_unavailable, "malformed chat-completion response body");
    std::vector<std::string> out;
    for (const auto& choice : j.at("choices"))
      out.push_back(choice.at("message").at("content").get<std::string>());
    if (static_cast<int>(out.size()) != n)
      throw Error(Errc::backend_unavailable,
                  "expected " + std::to_string(n) + " choices, got " + std::to_string(out.size()));
    return out;
  }

  BackendSpec spec_;
  RetryPolicy retry_;
  SleepFn sleep_;
  std::string origin_;
  std::string path_prefix_;
};

}  // namespace haluj
