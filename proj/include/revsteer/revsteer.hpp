// Copyright 2026 The Revsteer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REVSTEER_REVSTEER_HPP_
#define REVSTEER_REVSTEER_HPP_

#include "revsteer/bench.hpp"
#include "revsteer/det_input.hpp"
#include "revsteer/dynamics.hpp"
#include "revsteer/errors.hpp"
#include "revsteer/lingauss.hpp"
#include "revsteer/rng.hpp"
#include "revsteer/score_matching.hpp"
#include "revsteer/score_model.hpp"
#include "revsteer/sde_sim.hpp"
#include "revsteer/synthesis.hpp"
#include "revsteer/threading.hpp"
#include "revsteer/time_grid.hpp"
#include "revsteer/train.hpp"
#include "revsteer/trajectory.hpp"

#endif  // REVSTEER_REVSTEER_HPP_
