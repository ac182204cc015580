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

// Episode engine. At every node the stop phase runs first; a stop ends the
// episode, otherwise the choice phase picks a perspective and the agent moves
// along its edge. Strategy hooks run pre_stop -> pre_choice -> post_step.
//
// Episode is a step-wise state machine so the same rules serve automated runs
// (run_episode) and human sessions (session.hpp).

#ifndef URBNAV_EPISODE_HPP
#define URBNAV_EPISODE_HPP

#include <chrono>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "urbnav/bench.hpp"
#include "urbnav/memory.hpp"
#include "urbnav/policy.hpp"
#include "urbnav/strategies.hpp"
#include "urbnav/synth.hpp"
#include "urbnav/trajectory.hpp"

namespace urbnav {

inline void validate(const EpisodeConfig& c) {
  if (c.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (c.round < 1 || c.total_rounds < 1 || c.round > c.total_rounds)
    throw std::invalid_argument("round must be in [1, total_rounds]");
  if (c.retries < 0) throw std::invalid_argument("retries must be >= 0");
}

/// Observation text per (node, heading): the table entry when present, else
/// generated from the graph.
class Observer {
 public:
  explicit Observer(const NavGraph& g, const ObservationTable* table = nullptr) : g_(&g), table_(table) {}

  std::string view(const NodeId& v, double heading) const {
    if (table_) {
      if (const auto* o = table_->find(v, heading)) return o->text;
    }
    return describe_view(*g_, v, heading).text;
  }

  /// Every navigable view at v, one per line in azimuth order.
  std::string panorama(const NodeId& v) const {
    std::string out;
    for (double h : g_->node(v).headings) {
      if (!out.empty()) out += "\n";
      out += view(v, h);
    }
    return out;
  }

 private:
  const NavGraph* g_;
  const ObservationTable* table_;
};

class Episode {
 public:
  /// `memory` may be null, in which case the episode keeps a private store.
  Episode(const NavGraph& g, const Task& task, EpisodeConfig cfg, StrategyStack stack = {},
          MemoryStore* memory = nullptr, const ObservationTable* observations = nullptr)
      : g_(&g), task_(&task), cfg_(std::move(cfg)), stack_(stack), observer_(g, observations),
        conf_(stack.k, stack.theta), dist_window_(stack.k) {
    validate(cfg_);
    validate(stack_);
    if (!memory) {
      own_memory_ = std::make_unique<MemoryStore>(task.id, cfg_.total_rounds);
      memory = own_memory_.get();
    }
    memory_ = memory;
    dist_ = hop_distances_to(g, g.require(task.goal));
    node_ = g.node(task.start).id;
    heading_ = initial_heading(g, node_);
    traj_.task_id = task.id;
    traj_.city = task.city;
    traj_.round = cfg_.round;
    traj_.start = node_;
    traj_.initial_heading = heading_;
    traj_.config = cfg_;
    traj_.strategies = stack_.label();
    trail_.push_back({node_, 1.0});
    dist_window_.push(distance(node_));
    memory_->begin_round(cfg_.round, node_, heading_);
    if (g.out_edges(g.require(node_)).empty()) fail("start node has no navigable edge");
  }

  Episode(const Episode&) = delete;
  Episode& operator=(const Episode&) = delete;

  bool finished() const { return finished_; }
  const NodeId& node() const { return node_; }
  double heading() const { return heading_; }
  int moves() const { return moves_; }
  int remaining() const { return cfg_.max_steps - moves_; }
  const Trajectory& trajectory() const { return traj_; }
  const Task& task() const { return *task_; }
  const EpisodeConfig& config() const { return cfg_; }
  const MemoryStore& memory() const { return *memory_; }
  bool awaiting_choice() const { return pending_stop_.has_value(); }
  const Observer& observer() const { return observer_; }

  std::vector<Perspective> current_perspectives() const { return perspectives(*g_, node_, heading_); }

  /// Builds the policy input for a phase, with strategy context attached.
  PolicyInput input(Phase phase, bool with_observations) const {
    PolicyInput in;
    in.phase = phase;
    in.graph = g_;
    in.task = task_;
    in.node = node_;
    in.heading = heading_;
    in.step = moves_;
    in.perspectives = current_perspectives();
    if (with_observations) {
      if (phase == Phase::kStop) {
        in.panorama = observer_.panorama(node_);
      } else {
        for (const auto& p : in.perspectives) in.observations.push_back(observer_.view(node_, p.heading));
      }
    }
    in.context = context(phase);
    return in;
  }

  /// Applies a stop-phase decision. Action -1 ends the episode.
  void submit_stop(const Decision& d, double wall_ms = 0.0) {
    require_active();
    if (pending_stop_) throw std::logic_error("stop phase already decided at this node");
    if (d.action == kActionStop) {
      StepRecord r = base_record(StepKind::kStop);
      r.stop = d;
      r.wall_ms = wall_ms;
      traj_.steps.push_back(std::move(r));
      finish(Termination::kStopped);
      return;
    }
    pending_stop_ = d;
    pending_wall_ms_ = wall_ms;
  }

  /// Applies a choice-phase decision: moves, then runs the backtracking check.
  void submit_choice(const Decision& d, double wall_ms = 0.0) {
    require_active();
    if (!pending_stop_) throw std::logic_error("choice submitted before the stop phase");
    const auto views = current_perspectives();
    if (d.action < 0 || d.action >= static_cast<int>(views.size()))
      throw std::out_of_range("action index " + std::to_string(d.action) + " out of range");
    const Perspective& p = views[static_cast<std::size_t>(d.action)];

    StepRecord r = base_record(StepKind::kMove);
    r.stop = *pending_stop_;
    r.choice = d;
    r.wall_ms = pending_wall_ms_ + wall_ms;
    pending_stop_.reset();
    just_backtracked_ = false;

    memory_->record_decision(node_, NodeDecisionRecord{0, d.rationale, last_action_, d.action,
                                                       std::string(to_string(p.direction)), d.confidence});
    last_action_ = d.action;
    apply_move(std::move(r), p, false);
    trail_.push_back({node_, d.confidence});
    conf_.push(d.confidence);
    dist_window_.push(distance(node_));
    if (check_cap()) return;
    post_step();
  }

  /// Ends the episode with termination=error.
  void fail(const std::string& message) {
    if (finished_) return;
    traj_.error = message;
    finish(Termination::kError);
  }

 private:
  int distance(const NodeId& v) const { return dist_[g_->require(v)]; }

  void require_active() const {
    if (finished_) throw std::logic_error("episode already finished");
  }

  StepRecord base_record(StepKind kind) const {
    StepRecord r;
    r.index = static_cast<int>(traj_.steps.size());
    r.kind = kind;
    r.node = node_;
    r.heading = heading_;
    r.distance_to_goal = distance(node_);
    return r;
  }

  StrategyContext context(Phase phase) const {
    StrategyContext c;
    c.just_backtracked = just_backtracked_;
    if (phase == Phase::kChoice && just_backtracked_ && stack_.b3) c.hint = b3_hint(*g_, node_, heading_, dist_);
    std::string surrounding;
    if (stack_.cognition == Cognition::kC1) surrounding = render_c1(*memory_);
    if (stack_.cognition == Cognition::kC2) surrounding = render_c2(*memory_, *g_);
    if (retrieval_active()) {
      if (stack_.r1) surrounding += render_retrieval(r1_retrieve(*memory_, *g_, node_, stack_.r1_hops));
      if (stack_.r2) surrounding += render_retrieval(r2_retrieve(*memory_, *g_, node_, stack_.r2_radius_m));
    }
    c.surrounding = std::move(surrounding);
    if (stack_.r3) {
      c.history = render_history(memory_->history());
      for (const auto& h : memory_->history()) c.recent_nodes.push_back(h.node);
    }
    return c;
  }

  bool retrieval_active() const { return stack_.retrieval() && cfg_.round == cfg_.total_rounds && cfg_.round > 1; }

  void apply_move(StepRecord r, const Perspective& p, bool backtrack) {
    const NavEdge* e = g_->find_edge(node_, p.target);
    r.direction = p.direction;
    r.next = p.target;
    r.edge_azimuth = e->azimuth;
    r.edge_length_m = e->length_m;
    memory_->record_move(node_, p.target, p.index, p.direction, e->azimuth, backtrack);
    if (stack_.r3) memory_->push_history(history_entry_of(*g_, r), stack_.r3_window);
    traj_.steps.push_back(std::move(r));
    node_ = p.target;
    heading_ = e->azimuth;
    ++moves_;
  }

  bool check_cap() {
    if (moves_ >= cfg_.max_steps) {
      finish(Termination::kStepCap);
      return true;
    }
    return false;
  }

  void post_step() {
    if (!stack_.any_backtracking()) return;
    if (cooldown_ > 0) {
      --cooldown_;
      return;
    }
    std::optional<std::size_t> target;
    if (stack_.confidence_trigger() && b1_should_backtrack(conf_)) {
      target = backtrack_target(trail_, stack_.b3 ? BacktrackMode::kB3 : BacktrackMode::kB1, stack_.k, stack_.theta);
    } else if (stack_.b2 && b2_should_backtrack(dist_window_)) {
      target = backtrack_target(trail_, BacktrackMode::kB2, stack_.k, stack_.theta);
    }
    if (!target) return;
    // Loop erasure: if the agent already stands on a trail node at or after
    // the target, the retrace starts from there.
    for (std::size_t i = *target; i + 1 < trail_.size(); ++i) {
      if (trail_[i].node == node_) {
        trail_.resize(i + 1);
        break;
      }
    }
    while (trail_.size() - 1 > *target) {
      const NodeId back_to = trail_[trail_.size() - 2].node;
      const auto views = current_perspectives();
      const auto it = std::find_if(views.begin(), views.end(), [&](const Perspective& p) { return p.target == back_to; });
      StepRecord r = base_record(StepKind::kBacktrack);
      apply_move(std::move(r), *it, true);
      last_action_ = it->index;
      trail_.pop_back();
      if (check_cap()) return;
    }
    conf_.clear();
    dist_window_.clear();
    dist_window_.push(distance(node_));
    cooldown_ = stack_.k;
    just_backtracked_ = true;
  }

  void finish(Termination t) {
    finished_ = true;
    pending_stop_.reset();
    traj_.terminal = node_;
    traj_.termination = t;
    memory_->end_round(t == Termination::kStopped && node_ == task_->goal);
  }

  const NavGraph* g_;
  const Task* task_;
  EpisodeConfig cfg_;
  StrategyStack stack_;
  Observer observer_;
  std::unique_ptr<MemoryStore> own_memory_;
  MemoryStore* memory_ = nullptr;
  std::vector<int> dist_;

  NodeId node_;
  double heading_ = 0.0;
  int moves_ = 0;
  bool finished_ = false;
  std::optional<Decision> pending_stop_;
  double pending_wall_ms_ = 0.0;
  std::optional<int> last_action_;

  ConfidenceWindow conf_;
  DistanceWindow dist_window_;
  std::vector<TrailEntry> trail_;
  int cooldown_ = 0;
  bool just_backtracked_ = false;

  Trajectory traj_;
};

namespace detail {

/// Calls the policy, retrying transport failures with exponential backoff.
inline Decision decide_with_retry(Policy& policy, const PolicyInput& in, const EpisodeConfig& cfg) {
  for (int attempt = 0;; ++attempt) {
    try {
      return policy.decide(in);
    } catch (const TransportError&) {
      if (attempt >= cfg.retries) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(cfg.retry_backoff_ms) << attempt));
    }
  }
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Drives an Episode with a policy until it stops, hits the step cap or fails.
inline Trajectory run_episode(const NavGraph& g, const Task& task, Policy& policy, const StrategyStack& stack,
                              const EpisodeConfig& cfg, MemoryStore* memory = nullptr,
                              const ObservationTable* observations = nullptr) {
  Episode ep(g, task, cfg, stack, memory, observations);
  const bool obs = policy.needs_observations();
  while (!ep.finished()) {
    try {
      auto t0 = std::chrono::steady_clock::now();
      Decision stop = detail::decide_with_retry(policy, ep.input(Phase::kStop, obs), cfg);
      if (stop.action != kActionStop) stop.action = kActionContinue;
      ep.submit_stop(stop, detail::elapsed_ms(t0));
      if (ep.finished()) break;
      t0 = std::chrono::steady_clock::now();
      const PolicyInput in = ep.input(Phase::kChoice, obs);
      Decision choice = detail::decide_with_retry(policy, in, cfg);
      if (choice.action < 0 || choice.action >= static_cast<int>(in.perspectives.size())) {
        choice = fallback_decision(Phase::kChoice);
      }
      ep.submit_choice(choice, detail::elapsed_ms(t0));
    } catch (const TransportError& e) {
      ep.fail(std::string("policy transport failure: ") + e.what());
    }
  }
  return ep.trajectory();
}

/// Builds the policy for a given round (1-based).
using PolicyFactory = std::function<std::unique_ptr<Policy>(int round)>;

struct RoundsResult {
  std::vector<Trajectory> trajectories;
  MemoryStore memory;
};

/// Multi-round protocol: all rounds share one memory store; R1/R2 retrieval
/// fires only in the final round.
inline RoundsResult run_rounds(const NavGraph& g, const Task& task, const PolicyFactory& make_policy,
                               const StrategyStack& stack, EpisodeConfig cfg, int n_rounds,
                               const ObservationTable* observations = nullptr) {
  if (n_rounds < 1) throw std::invalid_argument("n_rounds must be >= 1");
  RoundsResult out{{}, MemoryStore(task.id, n_rounds)};
  cfg.total_rounds = n_rounds;
  for (int r = 1; r <= n_rounds; ++r) {
    cfg.round = r;
    auto policy = make_policy(r);
    out.trajectories.push_back(run_episode(g, task, *policy, stack, cfg, &out.memory, observations));
  }
  return out;
}

}  // namespace urbnav

#endif  // URBNAV_EPISODE_HPP
