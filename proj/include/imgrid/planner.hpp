#pragma once

#include <optional>
#include <vector>

#include "imgrid/gridworld.hpp"

namespace imgrid::grid {

/// Breadth-first search over the product state (position, heading, carrying,
/// door state) for a goal-reaching action sequence. Returns std::nullopt when
/// the goal is unreachable. Drop and Done are never part of a shortest plan
/// and are excluded from the search.
std::optional<std::vector<Action>> find_goal_plan(const GridWorld& start);

}  // namespace imgrid::grid
