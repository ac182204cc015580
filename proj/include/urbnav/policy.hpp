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

// Policy interface and the scripted policies (random, forward, oracle,
// noisy oracle). The remote-model policy lives in remote_policy.hpp.

#ifndef URBNAV_POLICY_HPP
#define URBNAV_POLICY_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "urbnav/bench.hpp"
#include "urbnav/decision.hpp"
#include "urbnav/perspective.hpp"
#include "urbnav/rng.hpp"
#include "urbnav/routing.hpp"

namespace urbnav {

/// Text and hints the strategy layer injects into a decision. Empty fields
/// mean the corresponding prompt slot is left out.
struct StrategyContext {
  bool just_backtracked = false;
  std::optional<int> hint;           // B3 "please choose image index"
  std::string surrounding;           // C1/C2/R1/R2 text
  std::string history;               // R3 text
  std::vector<NodeId> recent_nodes;  // nodes named in the R3 window
};

struct PolicyInput {
  Phase phase = Phase::kStop;
  const NavGraph* graph = nullptr;
  const Task* task = nullptr;
  NodeId node;
  double heading = 0.0;
  int step = 0;  // moves taken so far
  std::vector<Perspective> perspectives;
  // Filled only for policies that ask for them (needs_observations()).
  std::vector<std::string> observations;  // one per perspective
  std::string panorama;                   // union of all views at the node
  StrategyContext context;
};

/// Raised by policies whose backend could not be reached; the engine retries.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Decision decide(const PolicyInput& in) = 0;
  virtual bool needs_observations() const { return false; }
  virtual std::string name() const = 0;
};

enum class PolicyKind { kRandom, kForward, kOracle, kNoisyOracle, kRemote };

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kForward: return "forward";
    case PolicyKind::kOracle: return "oracle";
    case PolicyKind::kNoisyOracle: return "noisy_oracle";
    case PolicyKind::kRemote: return "remote";
  }
  return "random";
}

inline PolicyKind policy_kind_from_string(std::string_view s) {
  for (auto k : {PolicyKind::kRandom, PolicyKind::kForward, PolicyKind::kOracle, PolicyKind::kNoisyOracle,
                 PolicyKind::kRemote}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown policy kind '" + std::string(s) + "'");
}

struct RemoteConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model;
  std::string token_env = "URBNAV_API_TOKEN";
  double timeout_s = 60.0;
  double temperature = 0.0;
  bool verbose = false;
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kOracle;
  double noise = 0.0;
  RemoteConfig remote;
  std::uint64_t seed = 0;
};

inline void validate(const PolicyConfig& c) {
  if (!(c.noise >= 0.0 && c.noise <= 1.0)) throw std::invalid_argument("noise p must be in [0,1]");
  if (c.kind == PolicyKind::kRemote && c.remote.timeout_s <= 0.0)
    throw std::invalid_argument("remote timeout must be positive");
}

inline json policy_config_to_json(const PolicyConfig& c) {
  return {{"kind", std::string(to_string(c.kind))},
          {"noise", c.noise},
          {"seed", c.seed},
          {"remote",
           {{"endpoint", c.remote.endpoint},
            {"model", c.remote.model},
            {"token_env", c.remote.token_env},
            {"timeout_s", c.remote.timeout_s},
            {"temperature", c.remote.temperature},
            {"verbose", c.remote.verbose}}}};
}

inline PolicyConfig policy_config_from_json(const json& j) {
  PolicyConfig c;
  c.kind = policy_kind_from_string(j.value("kind", std::string("oracle")));
  c.noise = j.value("noise", 0.0);
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("remote")) {
    const auto& r = j.at("remote");
    c.remote.endpoint = r.value("endpoint", c.remote.endpoint);
    c.remote.model = r.value("model", c.remote.model);
    c.remote.token_env = r.value("token_env", c.remote.token_env);
    c.remote.timeout_s = r.value("timeout_s", c.remote.timeout_s);
    c.remote.temperature = r.value("temperature", c.remote.temperature);
    c.remote.verbose = r.value("verbose", c.remote.verbose);
  }
  validate(c);
  return c;
}

namespace detail {

inline Decision scripted(Phase phase, int action, double confidence, std::string why) {
  Decision d;
  d.phase = phase;
  d.action = action;
  d.confidence = confidence;
  d.rationale = std::move(why);
  return d;
}

/// Oracle move at `node`: next node of gt_path when on it, else first hop of
/// the lexicographically-first shortest path to the goal.
class OracleCore {
 public:
  std::optional<int> action(const PolicyInput& in) {
    const NavGraph& g = *in.graph;
    const Task& t = *in.task;
    NodeId next;
    const auto it = std::find(t.gt_path.begin(), t.gt_path.end(), in.node);
    if (it != t.gt_path.end() && std::next(it) != t.gt_path.end() && g.find_edge(in.node, *std::next(it))) {
      next = *std::next(it);
    } else {
      const auto& d = distances(g, t.goal);
      const NodeIndex v = g.require(in.node);
      if (d[v] <= 0) return std::nullopt;
      std::optional<NodeIndex> best;
      for (NodeIndex u : g.out_targets(v)) {
        if (d[u] == d[v] - 1 && (!best || g.node(u).id < g.node(*best).id)) best = u;
      }
      if (!best) return std::nullopt;
      next = g.node(*best).id;
    }
    for (const auto& p : in.perspectives) {
      if (p.target == next) return p.index;
    }
    return std::nullopt;
  }

 private:
  const std::vector<int>& distances(const NavGraph& g, const NodeId& goal) {
    if (graph_ != &g || goal_ != goal) {
      graph_ = &g;
      goal_ = goal;
      dist_ = hop_distances_to(g, g.require(goal));
    }
    return dist_;
  }

  const NavGraph* graph_ = nullptr;
  NodeId goal_;
  std::vector<int> dist_;
};

}  // namespace detail

/// Never stops; uniform choice; confidence 0.5.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  Decision decide(const PolicyInput& in) override {
    if (in.phase == Phase::kStop) return detail::scripted(Phase::kStop, kActionContinue, 0.5, "random: continue");
    const int n = static_cast<int>(in.perspectives.size());
    const int a = n > 0 ? static_cast<int>(rng_.index(static_cast<std::uint64_t>(n))) : 0;
    return detail::scripted(Phase::kChoice, a, 0.5, "random choice");
  }
  std::string name() const override { return "random"; }

 private:
  Rng rng_;
};

/// Never stops; FORWARD if offered, else the smallest |turn| (earlier index on ties).
class ForwardPolicy : public Policy {
 public:
  Decision decide(const PolicyInput& in) override {
    if (in.phase == Phase::kStop) return detail::scripted(Phase::kStop, kActionContinue, 0.5, "forward: continue");
    int best = 0;
    for (const auto& p : in.perspectives) {
      if (std::abs(p.delta) < std::abs(in.perspectives[best].delta)) best = p.index;
    }
    return detail::scripted(Phase::kChoice, best, 0.5, "forward");
  }
  std::string name() const override { return "forward"; }
};

/// Follows the ground-truth path and stops exactly at the goal.
class OraclePolicy : public Policy {
 public:
  Decision decide(const PolicyInput& in) override {
    if (in.phase == Phase::kStop) {
      const bool at_goal = in.node == in.task->goal;
      return detail::scripted(Phase::kStop, at_goal ? kActionStop : kActionContinue, 1.0,
                              at_goal ? "oracle: at goal" : "oracle: continue");
    }
    auto a = core_.action(in);
    return detail::scripted(Phase::kChoice, a.value_or(0), 1.0, "oracle");
  }
  std::string name() const override { return "oracle"; }

 private:
  detail::OracleCore core_;
};

/// Oracle that errs with probability p. An erroneous pick is uniform over the
/// non-oracle perspectives with confidence U(0.2,0.6); a correct pick has
/// confidence U(0.8,1.0). Injected context is honoured: a B3 hint is followed,
/// and an erroneous pick that would revisit a node of the R3 window is
/// corrected back to the oracle move.
class NoisyOraclePolicy : public Policy {
 public:
  NoisyOraclePolicy(double p, std::uint64_t seed) : p_(p), rng_(seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("noise p must be in [0,1]");
  }

  Decision decide(const PolicyInput& in) override {
    if (in.phase == Phase::kStop) {
      const bool at_goal = in.node == in.task->goal;
      return detail::scripted(Phase::kStop, at_goal ? kActionStop : kActionContinue, 1.0,
                              at_goal ? "at goal" : "continue");
    }
    const int n = static_cast<int>(in.perspectives.size());
    const int oracle = core_.action(in).value_or(0);
    if (in.context.hint && *in.context.hint >= 0 && *in.context.hint < n) {
      return detail::scripted(Phase::kChoice, *in.context.hint, rng_.uniform(0.8, 1.0), "follow hint");
    }
    if (n >= 2 && rng_.bernoulli(p_)) {
      int pick = static_cast<int>(rng_.index(static_cast<std::uint64_t>(n - 1)));
      if (pick >= oracle) ++pick;
      const double c = rng_.uniform(0.2, 0.6);
      const auto& recent = in.context.recent_nodes;
      if (std::find(recent.begin(), recent.end(), in.perspectives[pick].target) != recent.end()) {
        return detail::scripted(Phase::kChoice, oracle, rng_.uniform(0.8, 1.0), "history avoids revisit");
      }
      return detail::scripted(Phase::kChoice, pick, c, "noisy error");
    }
    return detail::scripted(Phase::kChoice, oracle, rng_.uniform(0.8, 1.0), "oracle");
  }
  std::string name() const override { return "noisy_oracle"; }

 private:
  double p_;
  Rng rng_;
  detail::OracleCore core_;
};

/// Builds one of the scripted policies. Remote policies come from make_policy()
/// in remote_policy.hpp.
inline std::unique_ptr<Policy> make_scripted_policy(const PolicyConfig& cfg, std::uint64_t episode_seed) {
  validate(cfg);
  switch (cfg.kind) {
    case PolicyKind::kRandom: return std::make_unique<RandomPolicy>(episode_seed);
    case PolicyKind::kForward: return std::make_unique<ForwardPolicy>();
    case PolicyKind::kOracle: return std::make_unique<OraclePolicy>();
    case PolicyKind::kNoisyOracle: return std::make_unique<NoisyOraclePolicy>(cfg.noise, episode_seed);
    case PolicyKind::kRemote: break;
  }
  throw std::invalid_argument("remote policy is not a scripted policy");
}

}  // namespace urbnav

#endif  // URBNAV_POLICY_HPP
