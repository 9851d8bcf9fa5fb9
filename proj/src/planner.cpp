#include "imgrid/planner.hpp"

#include <algorithm>
#include <unordered_set>

namespace imgrid::grid {

namespace {

// Door state for the key: there is exactly one door in a DoorKey layout.
int door_state_code(const GridWorld& w) {
  for (int y = 0; y < w.height(); ++y)
    for (int x = 0; x < w.width(); ++x)
      if (w.cell(x, y).kind == CellKind::Door)
        return static_cast<int>(w.cell(x, y).door_state);
  return 0;
}

long state_key(const GridWorld& w) {
  const AgentPose& p = w.pose();
  long key = p.x;
  key = key * w.height() + p.y;
  key = key * 4 + p.dir;
  key = key * 2 + (w.carrying_key() ? 1 : 0);
  key = key * 3 + door_state_code(w);
  return key;
}

}  // namespace

std::optional<std::vector<Action>> find_goal_plan(const GridWorld& start) {
  if (start.done()) return std::nullopt;

  static constexpr Action kMoves[] = {Action::TurnLeft, Action::TurnRight,
                                      Action::Forward, Action::Pickup,
                                      Action::Toggle};

  struct Node {
    GridWorld world;
    int parent;
    Action action;
  };

  std::vector<Node> nodes;
  nodes.push_back({start, -1, Action::Done});
  std::unordered_set<long> visited{state_key(start)};

  for (std::size_t head = 0; head < nodes.size(); ++head) {
    for (Action a : kMoves) {
      GridWorld next = nodes[head].world;
      StepOutcome out = next.step(a);
      if (out.terminated) {
        std::vector<Action> plan{a};
        for (int i = static_cast<int>(head); i > 0; i = nodes[i].parent)
          plan.push_back(nodes[i].action);
        std::reverse(plan.begin(), plan.end());
        return plan;
      }
      if (out.truncated) continue;
      if (visited.insert(state_key(next)).second)
        nodes.push_back({std::move(next), static_cast<int>(head), a});
    }
  }
  return std::nullopt;
}

}  // namespace imgrid::grid
