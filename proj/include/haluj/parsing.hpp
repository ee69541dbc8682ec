#pragma once

#include <cctype>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "haluj/core.hpp"

namespace haluj::parsing {

// Tolerant extraction of structured output from raw model completions.
// Models wrap their objects in prose, emit script-style literals (single
// quotes, True/False/None), and put literal newlines inside strings; the
// helpers below normalize all of that before handing off to a JSON parser.

struct Block {
  size_t begin = 0;  // offset of the opening bracket
  size_t end = 0;    // offset one past the closing bracket
};

/// Find the FIRST balanced top-level block delimited by open/close, scanning
/// string-aware (single and double quotes, backslash escapes). Brackets of
/// the other kind inside the block do not affect the depth count.
inline std::optional<Block> find_balanced_block(std::string_view text, char open, char close) {
  size_t start = text.find(open);
  if (start == std::string_view::npos) return std::nullopt;
  int depth = 0;
  char quote = 0;
  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == '\\' && i + 1 < text.size()) { ++i; continue; }
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') { quote = c; continue; }
    if (c == open) ++depth;
    else if (c == close && --depth == 0) return Block{start, i + 1};
  }
  return std::nullopt;
}

namespace detail {

inline bool word_char(char c) {
  return c == '_' || std::isalnum(static_cast<unsigned char>(c));
}

inline void append_escaped_for_json(std::string& out, char c) {
  switch (c) {
    case '"':  out += "\\\""; break;
    case '\\': out += "\\\\"; break;
    case '\n': out += "\\n"; break;
    case '\r': out += "\\r"; break;
    case '\t': out += "\\t"; break;
    default:
      if (static_cast<unsigned char>(c) < 0x20) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\u%04x", c);
        out += buf;
      } else {
        out.push_back(c);
      }
  }
}

}  // namespace detail

/// Rewrite a script-style literal block into strict JSON: single-quoted
/// strings become double-quoted, bare True/False/None become
/// true/false/null, and literal control characters inside strings are
/// escaped. Double-quoted strings pass through with their escapes intact.
inline std::string normalize_literals(std::string_view block) {
  std::string out;
  out.reserve(block.size() + 16);
  size_t i = 0;
  while (i < block.size()) {
    const char c = block[i];
    if (c == '"') {
      out.push_back('"');
      ++i;
      while (i < block.size()) {
        const char s = block[i];
        if (s == '\\' && i + 1 < block.size()) {
          out.push_back('\\');
          out.push_back(block[i + 1]);
          i += 2;
          continue;
        }
        if (s == '"') { out.push_back('"'); ++i; break; }
        detail::append_escaped_for_json(out, s);
        ++i;
      }
      continue;
    }
    if (c == '\'') {
      out.push_back('"');
      ++i;
      while (i < block.size()) {
        const char s = block[i];
        if (s == '\\' && i + 1 < block.size()) {
          const char n = block[i + 1];
          if (n == '\'') out.push_back('\'');       // \' has no meaning in JSON
          else { out.push_back('\\'); out.push_back(n); }
          i += 2;
          continue;
        }
        if (s == '\'') { out.push_back('"'); ++i; break; }
        detail::append_escaped_for_json(out, s);
        ++i;
      }
      continue;
    }
    if (detail::word_char(c) && (i == 0 || !detail::word_char(block[i - 1]))) {
      size_t j = i;
      while (j < block.size() && detail::word_char(block[j])) ++j;
      const std::string_view word = block.substr(i, j - i);
      if (word == "True") out += "true";
      else if (word == "False") out += "false";
      else if (word == "None") out += "null";
      else out += word;
      i = j;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

/// First balanced block of the given kind, normalized and parsed. nullopt on
/// no block, unbalanced brackets, or post-normalization parse failure.
inline std::optional<json> parse_first_block(std::string_view text, char open, char close) {
  const auto block = find_balanced_block(text, open, close);
  if (!block) return std::nullopt;
  const std::string fixed =
      normalize_literals(text.substr(block->begin, block->end - block->begin));
  json j = json::parse(fixed, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

inline std::optional<json> parse_first_object(std::string_view text) {
  return parse_first_block(text, '{', '}');
}

inline std::optional<json> parse_first_array(std::string_view text) {
  return parse_first_block(text, '[', ']');
}

/// Whitespace-delimited token count; the unit for paragraph length rules.
inline int word_count(std::string_view text) {
  int n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace haluj::parsing
