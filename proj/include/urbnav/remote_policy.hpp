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

// Remote-model policy: renders the stop/choice prompts, posts a chat-completion
// request and parses the reply with parse_decision().
//
// Request body:
//   {"model": ..., "temperature": ..., "messages": [{"role": "user", "content": [
//       {"type": "text", "text": <prompt>},
//       one part per observation: {"type": "text", "text": "Image A: ..."}
//                             or {"type": "image_url", "image_url": {"url": ...}}
//   ]}]}
// Only plain http endpoints are supported.

#ifndef URBNAV_REMOTE_POLICY_HPP
#define URBNAV_REMOTE_POLICY_HPP

#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "httplib.h"
#include "urbnav/policy.hpp"
#include "urbnav/synth.hpp"

namespace urbnav {

// ---------------------------------------------------------------------------
// Prompt rendering.

inline std::string action_letter(int index) {
  if (index >= 0 && index < 26) return std::string(1, static_cast<char>('A' + index));
  return std::to_string(index);
}

inline const std::string& stop_format_instructions() {
  static const std::string s =
      "Reply with one JSON object with the keys \"overall observation\" (string), \"thoughts\" (string), "
      "\"action\" (0 to continue or -1 to stop) and \"score\" (your confidence in [0, 1]).";
  return s;
}

inline const std::string& choice_format_instructions() {
  static const std::string s =
      "Reply with one JSON object with the keys \"perspective observation\" (an object mapping each image letter "
      "to a short description), \"thoughts\" (string), \"action\" (the chosen image letter) and \"score\" (your "
      "confidence in [0, 1]).";
  return s;
}

/// Enumerates the offered views, e.g. "There are 2 perspectives: A (FORWARD, heading 0), B (RIGHT, heading 90)".
inline std::string perspective_prompt(const std::vector<Perspective>& views) {
  std::string s = "There " + std::string(views.size() == 1 ? "is 1 perspective" : "are " +
                                                                 std::to_string(views.size()) + " perspectives") +
                  ": ";
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (i) s += ", ";
    s += action_letter(views[i].index) + " (" + std::string(to_string(views[i].direction)) + ", heading " +
         detail::format_degrees(views[i].heading) + ")";
  }
  return s;
}

inline std::string direction_prompt(double heading) {
  return "You are currently facing heading " + detail::format_degrees(heading) + " (" +
         detail::compass_label(heading) + ")";
}

inline std::string stop_prompt(const PolicyInput& in) {
  std::string p =
      "#Instruction:\n"
      "You are a helpful robot that analyses images according to question and helps them find the way to reach "
      "their destination.\n"
      "Given the question, state whether the scene content satisfies the user's requirement.\n"
      "\n"
      "#Output Format:\n" +
      stop_format_instructions() +
      "\n"
      "\n"
      "#Example:\n"
      "\n"
      "##Input:\n"
      "[\n"
      "  {\"type\": \"text\",      \"text\": \"I am hungry\"},\n"
      "  {\"type\": \"image_url\", \"image_url\": \"...\"}\n"
      "]\n"
      "\n"
      "##Output:\n"
      "{\n"
      "  \"overall observation\": \"There are residential buildings, a bookstore, and a bus station.\",\n"
      "  \"thoughts\":    \"I am hungry, so I should find a restaurant. No restaurant here, keep going.\",\n"
      "  \"action\":       0\n"
      "}\n"
      "\n"
      "If you think you have already arrived at the destination, output action -1 for stop; otherwise 0.\n"
      "\n"
      "#Now it's your turn.\n"
      "\n"
      "##Input:\n"
      "\n" +
      in.task->instruction + "\n\nYou are now at viewpoint " + in.node + ".\n";
  if (in.context.just_backtracked) p += "\nYou have just backtracked to this viewpoint.\n";
  p += "\nThe panoramic observation follows.\n";
  return p;
}

inline std::string choice_prompt(const PolicyInput& in) {
  std::string p =
      "#Instruction:\n"
      "You are a helpful robot that analyses multiple candidate images and selects the one that best answers the "
      "user's question.\n"
      "Return its index (A, B, C …) together with a confidence score in [0, 1].\n"
      "\n"
      "#Output Format:\n" +
      choice_format_instructions() +
      "\n"
      "\n"
      "#Example:\n"
      "\n"
      "##Input:\n"
      "[\n"
      "  {\"type\": \"text\",      \"text\": \"I am hungry\"},\n"
      "  {\"type\": \"image_url\", \"image_url\": \"...\"},\n"
      "  {\"type\": \"image_url\", \"image_url\": \"...\"}\n"
      "]\n"
      "\n"
      "##Output:\n"
      "{\n"
      "  \"perspective observation\": {\n"
      "    \"A\": \"A narrow side street with no shops or amenities nearby.\",\n"
      "    \"B\": \"A broad avenue lined with numerous office buildings, suggesting a higher chance of restaurants "
      "and other services.\"\n"
      "  },\n"
      "  \"thoughts\": \"I'm hungry and need the route most likely to lead to food. The broad avenue (B) lined with "
      "office buildings is much more likely to have restaurants, while the narrow side street (A) lacks any "
      "amenities. Therefore, I should head toward B.\",\n"
      "  \"action\":  \"B\",\n"
      "  \"score\":   0.78\n"
      "}\n"
      "\n" +
      perspective_prompt(in.perspectives) +
      ". Make sure the number of observations equals the number of perspectives provided.\n" +
      direction_prompt(in.heading) +
      ". Prioritise the FORWARD, LEFT, and RIGHT directions; move BACK only if no better option exists.\n";
  if (in.context.hint) {
    p += "\nYou have just backtracked, please choose image index " + action_letter(*in.context.hint) + ".\n";
  }
  auto block = [&](const char* title, const std::string& body) {
    if (body.empty()) return;
    p += std::string("\n") + title + ":\n" + body;
    if (body.back() != '\n') p += "\n";
  };
  block("Historical context from previous rounds", in.context.surrounding);
  block("Visit trajectory so far", in.context.history);
  p += "\n" + in.task->instruction + "\n\nYou are now at viewpoint " + in.node + ".\n";
  p += "\nThe candidate observations follow, one per perspective in index order.\n";
  return p;
}

/// Optional image references per (node, heading); text observations are used when absent.
using ImageResolver = std::function<std::optional<std::string>(const NodeId&, double heading)>;

/// Chat-completion request body for one decision.
inline json build_request(const PolicyInput& in, const RemoteConfig& cfg, const ImageResolver& images = {}) {
  json content = json::array();
  if (in.phase == Phase::kStop) {
    content.push_back({{"type", "text"}, {"text", stop_prompt(in)}});
    content.push_back({{"type", "text"}, {"text", "Panorama:\n" + in.panorama}});
  } else {
    content.push_back({{"type", "text"}, {"text", choice_prompt(in)}});
    for (std::size_t i = 0; i < in.perspectives.size(); ++i) {
      const auto& p = in.perspectives[i];
      std::optional<std::string> ref = images ? images(in.node, p.heading) : std::nullopt;
      if (ref) {
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", *ref}}}});
      } else {
        const std::string text = i < in.observations.size() ? in.observations[i] : std::string{};
        content.push_back({{"type", "text"}, {"text", "Image " + action_letter(p.index) + ": " + text}});
      }
    }
  }
  json body = {{"messages", json::array({{{"role", "user"}, {"content", content}}})},
               {"temperature", cfg.temperature}};
  if (!cfg.model.empty()) body["model"] = cfg.model;
  return body;
}

/// Text of choices[0].message.content; the raw body when the shape differs.
inline std::string extract_reply(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return body;
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string out;
      for (const auto& part : content) {
        if (part.is_object() && part.value("type", std::string{}) == "text") out += part.value("text", std::string{});
      }
      return out;
    }
  } catch (const json::exception&) {
  }
  return body;
}

// ---------------------------------------------------------------------------
// Transport.

/// Caps concurrent requests across all remote policies sharing it.
class InflightLimiter {
 public:
  explicit InflightLimiter(int capacity) : free_(capacity < 1 ? 1 : capacity) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

struct Endpoint {
  std::string scheme_host_port;  // e.g. "http://127.0.0.1:8000"
  std::string path;              // e.g. "/v1/chat/completions"
};

inline Endpoint parse_endpoint(const std::string& url) {
  const std::string prefix = "http://";
  if (url.rfind(prefix, 0) != 0) throw std::invalid_argument("endpoint must be an http:// URL: " + url);
  const std::size_t slash = url.find('/', prefix.size());
  Endpoint e;
  e.scheme_host_port = url.substr(0, slash);
  e.path = slash == std::string::npos ? "/" : url.substr(slash);
  if (e.scheme_host_port.size() == prefix.size()) throw std::invalid_argument("endpoint has no host: " + url);
  return e;
}

namespace detail {

/// Reads the token variable the first time a name is asked for; later calls
/// return the cached value.
inline std::string read_token_once(const std::string& env_name) {
  static std::mutex mu;
  static std::map<std::string, std::string> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(env_name);
  if (it != cache.end()) return it->second;
  const char* v = env_name.empty() ? nullptr : std::getenv(env_name.c_str());
  return cache[env_name] = v ? std::string(v) : std::string{};
}

}  // namespace detail

/// Replaces every occurrence of `secret` in `text` with "***".
inline std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (std::size_t pos = 0; (pos = text.find(secret, pos)) != std::string::npos; pos += 3) text.replace(pos, secret.size(), "***");
  return text;
}

class RemotePolicy : public Policy {
 public:
  using Logger = std::function<void(const std::string&)>;

  explicit RemotePolicy(RemoteConfig cfg, std::shared_ptr<InflightLimiter> limiter = nullptr, Logger log = {},
                        ImageResolver images = {})
      : cfg_(std::move(cfg)), endpoint_(parse_endpoint(cfg_.endpoint)), limiter_(std::move(limiter)),
        log_(std::move(log)), images_(std::move(images)) {
    token_ = detail::read_token_once(cfg_.token_env);
    client_ = std::make_unique<httplib::Client>(endpoint_.scheme_host_port);
    const auto secs = static_cast<time_t>(cfg_.timeout_s);
    const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
    client_->set_connection_timeout(secs, usecs);
    client_->set_read_timeout(secs, usecs);
    client_->set_write_timeout(secs, usecs);
    client_->set_keep_alive(true);
  }

  Decision decide(const PolicyInput& in) override {
    const json body = build_request(in, cfg_, images_);
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    if (cfg_.verbose && log_) log_(redact("request " + payload, token_));

    if (limiter_) limiter_->acquire();
    auto res = client_->Post(endpoint_.path, headers, payload, "application/json");
    if (limiter_) limiter_->release();

    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (cfg_.verbose && log_) log_(redact("response " + std::to_string(res->status) + " " + res->body, token_));
    if (res->status < 200 || res->status >= 300)
      throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
    return parse_decision(extract_reply(res->body), in.phase, static_cast<int>(in.perspectives.size()));
  }

  bool needs_observations() const override { return true; }
  std::string name() const override { return "remote"; }

 private:
  RemoteConfig cfg_;
  Endpoint endpoint_;
  std::string token_;
  std::unique_ptr<httplib::Client> client_;
  std::shared_ptr<InflightLimiter> limiter_;
  Logger log_;
  ImageResolver images_;
};

/// Any policy kind. Remote policies share `limiter` when given.
inline std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, std::uint64_t episode_seed,
                                           std::shared_ptr<InflightLimiter> limiter = nullptr,
                                           RemotePolicy::Logger log = {}) {
  if (cfg.kind == PolicyKind::kRemote) {
    validate(cfg);
    return std::make_unique<RemotePolicy>(cfg.remote, std::move(limiter), std::move(log));
  }
  return make_scripted_policy(cfg, episode_seed);
}

}  // namespace urbnav

#endif  // URBNAV_REMOTE_POLICY_HPP
