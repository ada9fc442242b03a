// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "aubin/problem.hpp"

namespace aubin::fixtures {

// Built-in problems so the CLI and the acceptance suite need no external
// data: "example1" (nonlinear NLP constraints over the nonpositive orthant),
// "example2" (planar Lorentz cone constraint), "quadratic" (one quadratic
// constraint with an active positive multiplier).
std::vector<std::string> names();

std::string problem_json(const std::string& name);

ProblemSpec load(const std::string& name);

}  // namespace aubin::fixtures
