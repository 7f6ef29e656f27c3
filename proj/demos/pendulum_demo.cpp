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

// Swing the stochastic pendulum from hanging (angle pi) to upright
// (angle 0) in 5 time units with a learned feedback law.

#include <cmath>
#include <cstdio>

#include "revsteer/revsteer.hpp"

int main() {
  using namespace revsteer;

  const auto sys = builtin_system("pendulum", {}, 0.3);
  const TimeGrid grid(5.0, 0.004);
  Vector x0(2), x_f(2);
  x0 << M_PI, 0.0;
  x_f << 0.0, 0.0;

  TrainConfig tc;
  tc.k1_override = 32;
  tc.iterations = 3000;
  tc.learning_rate = 1e-3;
  tc.seed = 1;
  std::printf("training the score model (%d iterations)...\n", tc.iterations);
  const SynthesisResult result = synthesize(
      sys, grid, x_f, 0.0, DeterministicInput::zero(1), 1000, tc, 2);

  const auto rollout = simulate_controlled(sys, grid, 200, x0,
                                           result.controller.law(),
                                           NoiseSource(7));
  int upright = 0;
  for (int i = 0; i < rollout.count(); ++i) {
    if (std::abs(wrap_angle_to_pi(rollout.terminal_state(i)[0])) <= 0.3) {
      ++upright;
    }
  }
  std::printf("terminal MSE (angle wrapped mod 2 pi): %.4f\n",
              mse(rollout, x_f, true));
  std::printf("%d of %d paths end upright, mean control energy %.2f\n",
              upright, rollout.count(), u_norm(rollout));
  return 0;
}
