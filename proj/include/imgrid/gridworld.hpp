#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace imgrid::grid {

enum class CellKind : std::uint8_t { Empty, Wall, Key, Door, Goal };
enum class DoorState : std::uint8_t { Locked, Closed, Open };

struct Cell {
  CellKind kind = CellKind::Empty;
  DoorState door_state = DoorState::Locked;  // meaningful only for Door
};

enum class Action : int {
  TurnLeft = 0,
  TurnRight = 1,
  Forward = 2,
  Pickup = 3,
  Drop = 4,
  Toggle = 5,
  Done = 6,  // no-op, kept to preserve the 7-action space
};
inline constexpr int kNumActions = 7;

/// Heading: 0=east, 1=south, 2=west, 3=north (screen coordinates, y down).
struct AgentPose {
  int x = 0;
  int y = 0;
  int dir = 0;
};

/// Integer triple for one observed cell. Unseen cells are all-zero.
struct CellView {
  int object_id = 0;
  int color_id = 0;
  int state_id = 0;
};

// Object ids (MiniGrid-compatible): 0 unseen, 1 empty, 2 wall, 4 door,
// 5 key, 8 goal.
inline constexpr int kObjectUnseen = 0;
inline constexpr int kObjectEmpty = 1;
inline constexpr int kObjectWall = 2;
inline constexpr int kObjectDoor = 4;
inline constexpr int kObjectKey = 5;
inline constexpr int kObjectGoal = 8;
// Colors: 1 green, 4 yellow, 5 grey.
inline constexpr int kColorGreen = 1;
inline constexpr int kColorYellow = 4;
inline constexpr int kColorGrey = 5;
// Door states: 0 open, 1 closed, 2 locked.
inline constexpr int kStateOpen = 0;
inline constexpr int kStateClosed = 1;
inline constexpr int kStateLocked = 2;
// Fixed maxima used to normalize triples into [0, 1] for network input.
inline constexpr double kObjectIdMax = 10.0;
inline constexpr double kColorIdMax = 5.0;
inline constexpr double kStateIdMax = 2.0;

/// Egocentric 7x7 partial view. The agent sits at column 3 of the bottom
/// row, facing up; row 0 is the farthest row ahead.
struct Observation {
  static constexpr int kViewSize = 7;
  static constexpr int kFlatDim = kViewSize * kViewSize * 3 + 1;

  std::array<CellView, kViewSize * kViewSize> view{};
  bool carrying_key = false;

  const CellView& at(int col, int row) const { return view[static_cast<std::size_t>(row) * kViewSize + col]; }
  CellView& at(int col, int row) { return view[static_cast<std::size_t>(row) * kViewSize + col]; }

  /// Normalized flat vector (object/10, color/5, state/2 per cell, then the
  /// carry flag), the network input layout.
  std::vector<double> flatten() const;
};

struct StepOutcome {
  Observation observation;
  double extrinsic_reward = 0.0;
  bool terminated = false;  // goal reached
  bool truncated = false;   // step budget exhausted
};

/// Canonical, deduplicated object summary of an observation. Coordinates are
/// deliberately dropped so identical summaries produce identical prompts.
struct VisibleObjects {
  std::vector<std::string> objects;  // ordered: key < door(state) < goal < wall
  bool carrying_key = false;
};

VisibleObjects visible_objects(const Observation& obs);

/// DoorKey gridworld: locked door in a wall that splits the grid, key on the
/// agent's side, goal in the far corner. Sparse terminal-only reward.
class GridWorld {
 public:
  /// size >= 5; layout is a pure function of (size, layout_seed).
  /// max_steps = ceil(1.4 * 10 * size^2).
  static GridWorld doorkey(int size, std::uint64_t layout_seed);

  StepOutcome step(Action action);
  Observation observe() const;

  /// Fixed-width text render, one character per cell, rows ending in '\n'.
  /// '#' wall, '.' empty, 'K' key, 'G' goal, 'L'/'D'/'O' locked/closed/open
  /// door, '>'/'v'/'<'/'^' agent.
  std::string render() const;

  int width() const { return width_; }
  int height() const { return height_; }
  const AgentPose& pose() const { return pose_; }
  bool carrying_key() const { return carrying_key_; }
  int step_count() const { return step_count_; }
  int max_steps() const { return max_steps_; }
  std::uint64_t layout_seed() const { return layout_seed_; }
  bool terminated() const { return terminated_; }
  bool truncated() const { return truncated_; }
  bool done() const { return terminated_ || truncated_; }
  const Cell& cell(int x, int y) const;
  bool in_bounds(int x, int y) const;

 private:
  GridWorld() = default;
  Cell& cell_ref(int x, int y);
  bool walkable(int x, int y) const;
  bool transparent(int x, int y) const;

  int width_ = 0;
  int height_ = 0;
  std::vector<Cell> cells_;
  AgentPose pose_;
  bool carrying_key_ = false;
  int step_count_ = 0;
  int max_steps_ = 0;
  std::uint64_t layout_seed_ = 0;
  bool terminated_ = false;
  bool truncated_ = false;
};

/// Unit vector of a heading (screen coordinates).
void heading_delta(int dir, int& dx, int& dy);

}  // namespace imgrid::grid
