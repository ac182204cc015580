/*
 * Copyright 2026 The urbnav Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Decision records and the model-reply parser.
//
// Replies are expected to carry one JSON object:
//   stop phase:   {"overall observation": ..., "thoughts": ..., "action": 0 | -1, "score": c}
//   choice phase: {"perspective observation": {...}, "thoughts": ..., "action": "B", "score": c}
// parse_decision() never throws. Anything it cannot validate becomes the
// fallback decision (action 0, confidence 0, fallback_used = true).

#ifndef URBNAV_DECISION_HPP
#define URBNAV_DECISION_HPP

#include <cctype>
#include <cmath>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace urbnav {

enum class Phase { kStop, kChoice };

inline constexpr int kActionContinue = 0;
inline constexpr int kActionStop = -1;
inline constexpr double kDefaultConfidence = 0.5;

inline std::string_view to_string(Phase p) { return p == Phase::kStop ? "stop" : "choice"; }

struct Decision {
  Phase phase = Phase::kStop;
  std::string observation_digest;
  std::string rationale;
  int action = kActionContinue;
  double confidence = 0.0;
  bool fallback_used = false;
};

inline Decision fallback_decision(Phase phase) {
  Decision d;
  d.phase = phase;
  d.action = 0;
  d.confidence = 0.0;
  d.fallback_used = true;
  return d;
}

/// Replaces invalid UTF-8 sequences with '?', so the text can be re-serialized.
inline std::string sanitize_utf8(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const auto c = static_cast<unsigned char>(in[i]);
    std::size_t len = 0;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      len = 4;
    }
    bool ok = len > 0 && i + len <= in.size();
    for (std::size_t k = 1; ok && k < len; ++k) ok = (static_cast<unsigned char>(in[i + k]) & 0xC0) == 0x80;
    if (ok && len == 3) {
      const auto c1 = static_cast<unsigned char>(in[i + 1]);
      ok = !(c == 0xE0 && c1 < 0xA0) && !(c == 0xED && c1 >= 0xA0);
    }
    if (ok && len == 4) {
      const auto c1 = static_cast<unsigned char>(in[i + 1]);
      ok = !(c == 0xF0 && c1 < 0x90) && !(c == 0xF4 && c1 >= 0x90);
    }
    if (ok) {
      out.append(in.substr(i, len));
      i += len;
    } else {
      out.push_back('?');
      ++i;
    }
  }
  return out;
}

namespace detail {

/// Span of the first balanced {...} block, honouring string literals. If the
/// block never closes, the tail from the first '{' is returned.
inline std::optional<std::string_view> first_object(std::string_view raw, bool* balanced) {
  const std::size_t open = raw.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) {
        *balanced = true;
        return raw.substr(open, i - open + 1);
      }
    }
  }
  *balanced = false;
  return raw.substr(open);
}

struct Scalar {
  bool is_string = false;
  std::string text;
};

/// Lenient lookup of `"key": value` where value is a string literal or a bare
/// token; used when the object is not strict JSON (missing commas etc.).
inline std::optional<Scalar> scan_field(std::string_view obj, std::string_view key) {
  const std::string needle = "\"" + std::string(key) + "\"";
  std::size_t pos = 0;
  while ((pos = obj.find(needle, pos)) != std::string_view::npos) {
    std::size_t i = pos + needle.size();
    pos = i;
    while (i < obj.size() && std::isspace(static_cast<unsigned char>(obj[i]))) ++i;
    if (i >= obj.size() || obj[i] != ':') continue;
    ++i;
    while (i < obj.size() && std::isspace(static_cast<unsigned char>(obj[i]))) ++i;
    if (i >= obj.size()) return std::nullopt;
    Scalar s;
    if (obj[i] == '"') {
      s.is_string = true;
      for (++i; i < obj.size() && obj[i] != '"'; ++i) {
        if (obj[i] == '\\' && i + 1 < obj.size()) {
          ++i;
          switch (obj[i]) {
            case 'n': s.text.push_back('\n'); break;
            case 't': s.text.push_back('\t'); break;
            default: s.text.push_back(obj[i]); break;
          }
        } else {
          s.text.push_back(obj[i]);
        }
      }
      if (i >= obj.size()) return std::nullopt;
      return s;
    }
    const std::size_t start = i;
    while (i < obj.size() && (std::isalnum(static_cast<unsigned char>(obj[i])) || obj[i] == '-' || obj[i] == '+' ||
                              obj[i] == '.')) {
      ++i;
    }
    if (i == start) return std::nullopt;
    s.text = std::string(obj.substr(start, i - start));
    return s;
  }
  return std::nullopt;
}

inline std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Maps an action token to an index: integers directly, single letters A=0, B=1, ...
inline std::optional<int> parse_action_token(const Scalar& token, Phase phase) {
  std::string_view t = token.text;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.remove_suffix(1);
  if (t.size() == 1 && std::isalpha(static_cast<unsigned char>(t[0]))) {
    if (phase == Phase::kStop) return std::nullopt;
    return std::toupper(static_cast<unsigned char>(t[0])) - 'A';
  }
  auto v = parse_number(t);
  if (!v || *v != std::floor(*v) || std::abs(*v) > 1e6) return std::nullopt;
  return static_cast<int>(*v);
}

inline std::optional<Scalar> scalar_of(const nlohmann::json& v) {
  if (v.is_string()) return Scalar{true, v.get<std::string>()};
  if (v.is_number_integer()) return Scalar{false, std::to_string(v.get<long long>())};
  if (v.is_number()) {
    const double d = v.get<double>();
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    if (ec != std::errc()) return std::nullopt;
    return Scalar{false, std::string(buf, ptr)};
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses a model reply for the given phase. Total: never throws.
inline Decision parse_decision(std::string_view raw, Phase phase, int n_perspectives) {
  try {
    bool balanced = false;
    auto obj = detail::first_object(raw, &balanced);
    if (!obj) return fallback_decision(phase);

    std::optional<detail::Scalar> action_tok;
    std::optional<detail::Scalar> score_tok;
    std::string observation;
    std::string thoughts;
    const char* obs_key = phase == Phase::kStop ? "overall observation" : "perspective observation";

    nlohmann::json doc = balanced ? nlohmann::json::parse(*obj, nullptr, false) : nlohmann::json();
    if (balanced && !doc.is_discarded() && doc.is_object()) {
      if (!doc.contains("action")) return fallback_decision(phase);
      action_tok = detail::scalar_of(doc.at("action"));
      if (!action_tok) return fallback_decision(phase);
      for (const char* key : {"score", "confidence"}) {
        if (doc.contains(key)) {
          score_tok = detail::scalar_of(doc.at(key));
          if (!score_tok) return fallback_decision(phase);
          break;
        }
      }
      if (doc.contains(obs_key)) {
        const auto& o = doc.at(obs_key);
        observation = o.is_string() ? o.get<std::string>() : o.dump();
      }
      if (doc.contains("thoughts") && doc.at("thoughts").is_string()) thoughts = doc.at("thoughts").get<std::string>();
    } else {
      action_tok = detail::scan_field(*obj, "action");
      if (!action_tok) return fallback_decision(phase);
      score_tok = detail::scan_field(*obj, "score");
      if (!score_tok) score_tok = detail::scan_field(*obj, "confidence");
      if (auto o = detail::scan_field(*obj, obs_key); o && o->is_string) observation = o->text;
      if (auto t = detail::scan_field(*obj, "thoughts"); t && t->is_string) thoughts = t->text;
    }

    auto action = detail::parse_action_token(*action_tok, phase);
    if (!action) return fallback_decision(phase);
    if (phase == Phase::kStop) {
      if (*action != kActionContinue && *action != kActionStop) return fallback_decision(phase);
    } else if (*action < 0 || *action >= n_perspectives) {
      return fallback_decision(phase);
    }

    double confidence = kDefaultConfidence;
    if (score_tok) {
      auto c = detail::parse_number(score_tok->text);
      if (!c || *c < 0.0 || *c > 1.0) return fallback_decision(phase);
      confidence = *c;
    }

    Decision d;
    d.phase = phase;
    d.action = *action;
    d.confidence = confidence;
    d.observation_digest = sanitize_utf8(observation);
    d.rationale = sanitize_utf8(thoughts);
    d.fallback_used = false;
    return d;
  } catch (...) {
    return fallback_decision(phase);
  }
}

}  // namespace urbnav

#endif  // URBNAV_DECISION_HPP
