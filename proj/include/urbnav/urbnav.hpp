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

// Umbrella header.

#ifndef URBNAV_URBNAV_HPP
#define URBNAV_URBNAV_HPP

#include "urbnav/geo.hpp"
#include "urbnav/graph.hpp"
#include "urbnav/graph_io.hpp"
#include "urbnav/routing.hpp"
#include "urbnav/rng.hpp"
#include "urbnav/synth.hpp"
#include "urbnav/bench.hpp"
#include "urbnav/decision.hpp"
#include "urbnav/perspective.hpp"
#include "urbnav/trajectory.hpp"
#include "urbnav/policy.hpp"
#include "urbnav/strategies.hpp"
#include "urbnav/memory.hpp"
#include "urbnav/episode.hpp"
#include "urbnav/metrics.hpp"
#include "urbnav/remote_policy.hpp"
#include "urbnav/runner.hpp"
#include "urbnav/session.hpp"

#endif  // URBNAV_URBNAV_HPP
