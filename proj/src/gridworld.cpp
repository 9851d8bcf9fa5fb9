#include "imgrid/gridworld.hpp"

#include <algorithm>
#include <cmath>

#include "imgrid/errors.hpp"
#include "imgrid/random.hpp"

namespace imgrid::grid {

void heading_delta(int dir, int& dx, int& dy) {
  static constexpr int kDx[4] = {1, 0, -1, 0};
  static constexpr int kDy[4] = {0, 1, 0, -1};
  dx = kDx[dir & 3];
  dy = kDy[dir & 3];
}

std::vector<double> Observation::flatten() const {
  std::vector<double> out;
  out.reserve(kFlatDim);
  for (const CellView& c : view) {
    out.push_back(c.object_id / kObjectIdMax);
    out.push_back(c.color_id / kColorIdMax);
    out.push_back(c.state_id / kStateIdMax);
  }
  out.push_back(carrying_key ? 1.0 : 0.0);
  return out;
}

VisibleObjects visible_objects(const Observation& obs) {
  bool key = false, goal = false, wall = false;
  bool door_state_seen[3] = {false, false, false};
  for (const CellView& c : obs.view) {
    switch (c.object_id) {
      case kObjectKey: key = true; break;
      case kObjectGoal: goal = true; break;
      case kObjectWall: wall = true; break;
      case kObjectDoor:
        if (c.state_id >= 0 && c.state_id <= 2) door_state_seen[c.state_id] = true;
        break;
      default:
        break;
    }
  }
  VisibleObjects result;
  result.carrying_key = obs.carrying_key;
  if (key) result.objects.push_back("key");
  if (door_state_seen[kStateOpen]) result.objects.push_back("door(open)");
  if (door_state_seen[kStateClosed]) result.objects.push_back("door(closed)");
  if (door_state_seen[kStateLocked]) result.objects.push_back("door(locked)");
  if (goal) result.objects.push_back("goal");
  if (wall) result.objects.push_back("wall");
  return result;
}

const Cell& GridWorld::cell(int x, int y) const {
  if (!in_bounds(x, y)) throw UsageError("cell: out of bounds");
  return cells_[static_cast<std::size_t>(y) * width_ + x];
}

Cell& GridWorld::cell_ref(int x, int y) {
  return cells_[static_cast<std::size_t>(y) * width_ + x];
}

bool GridWorld::in_bounds(int x, int y) const {
  return x >= 0 && x < width_ && y >= 0 && y < height_;
}

bool GridWorld::walkable(int x, int y) const {
  if (!in_bounds(x, y)) return false;
  const Cell& c = cells_[static_cast<std::size_t>(y) * width_ + x];
  switch (c.kind) {
    case CellKind::Empty:
    case CellKind::Goal:
      return true;
    case CellKind::Door:
      return c.door_state == DoorState::Open;
    default:
      return false;
  }
}

bool GridWorld::transparent(int x, int y) const {
  if (!in_bounds(x, y)) return false;
  const Cell& c = cells_[static_cast<std::size_t>(y) * width_ + x];
  if (c.kind == CellKind::Wall) return false;
  if (c.kind == CellKind::Door && c.door_state != DoorState::Open) return false;
  return true;
}

GridWorld GridWorld::doorkey(int size, std::uint64_t layout_seed) {
  if (size < 5)
    throw ConfigError("doorkey: size must be >= 5 (wall, door and key do not fit)");

  GridWorld w;
  w.width_ = size;
  w.height_ = size;
  w.layout_seed_ = layout_seed;
  w.max_steps_ = static_cast<int>(std::ceil(1.4 * 10.0 * size * size));
  w.cells_.assign(static_cast<std::size_t>(size) * size, Cell{});

  for (int x = 0; x < size; ++x) {
    w.cell_ref(x, 0).kind = CellKind::Wall;
    w.cell_ref(x, size - 1).kind = CellKind::Wall;
  }
  for (int y = 0; y < size; ++y) {
    w.cell_ref(0, y).kind = CellKind::Wall;
    w.cell_ref(size - 1, y).kind = CellKind::Wall;
  }

  RandomEngine rng(layout_seed);
  const int split_col = 2 + rng.uniform_int(size - 4);  // [2, size-3]
  for (int y = 0; y < size; ++y) w.cell_ref(split_col, y).kind = CellKind::Wall;
  const int door_row = 1 + rng.uniform_int(size - 2);  // [1, size-2]
  Cell& door = w.cell_ref(split_col, door_row);
  door.kind = CellKind::Door;
  door.door_state = DoorState::Locked;

  // Key and agent on distinct empty cells left of the splitting wall.
  auto left_cell = [&](int& x, int& y) {
    x = 1 + rng.uniform_int(split_col - 1);
    y = 1 + rng.uniform_int(size - 2);
  };
  int kx, ky;
  left_cell(kx, ky);
  w.cell_ref(kx, ky).kind = CellKind::Key;
  int ax, ay;
  do {
    left_cell(ax, ay);
  } while (ax == kx && ay == ky);
  w.pose_ = {ax, ay, rng.uniform_int(4)};

  w.cell_ref(size - 2, size - 2).kind = CellKind::Goal;
  return w;
}

StepOutcome GridWorld::step(Action action) {
  if (done()) throw UsageError("step: episode already finished");

  ++step_count_;

  int dx, dy;
  heading_delta(pose_.dir, dx, dy);
  const int fx = pose_.x + dx;
  const int fy = pose_.y + dy;

  switch (action) {
    case Action::TurnLeft:
      pose_.dir = (pose_.dir + 3) & 3;
      break;
    case Action::TurnRight:
      pose_.dir = (pose_.dir + 1) & 3;
      break;
    case Action::Forward:
      if (walkable(fx, fy)) {
        pose_.x = fx;
        pose_.y = fy;
      }
      break;
    case Action::Pickup:
      if (in_bounds(fx, fy) && cell_ref(fx, fy).kind == CellKind::Key &&
          !carrying_key_) {
        cell_ref(fx, fy).kind = CellKind::Empty;
        carrying_key_ = true;
      }
      break;
    case Action::Drop:
      if (carrying_key_ && in_bounds(fx, fy) &&
          cell_ref(fx, fy).kind == CellKind::Empty) {
        cell_ref(fx, fy).kind = CellKind::Key;
        carrying_key_ = false;
      }
      break;
    case Action::Toggle:
      if (in_bounds(fx, fy) && cell_ref(fx, fy).kind == CellKind::Door) {
        Cell& c = cell_ref(fx, fy);
        switch (c.door_state) {
          case DoorState::Locked:
            if (carrying_key_) c.door_state = DoorState::Open;
            break;
          case DoorState::Closed:
            c.door_state = DoorState::Open;
            break;
          case DoorState::Open:
            c.door_state = DoorState::Closed;
            break;
        }
      }
      break;
    case Action::Done:
      break;
  }

  StepOutcome out;
  if (cell(pose_.x, pose_.y).kind == CellKind::Goal) {
    terminated_ = true;
    out.extrinsic_reward =
        1.0 - 0.9 * (static_cast<double>(step_count_) / max_steps_);
  } else if (step_count_ >= max_steps_) {
    truncated_ = true;
  }
  out.terminated = terminated_;
  out.truncated = truncated_;
  out.observation = observe();
  return out;
}

Observation GridWorld::observe() const {
  constexpr int kView = Observation::kViewSize;
  constexpr int kAgentCol = kView / 2;       // 3
  constexpr int kAgentRow = kView - 1;       // 6

  // Map a view cell to world coordinates: forward f rows ahead, s cells to
  // the agent's right, rotated by the current heading.
  auto world_of = [&](int col, int row, int& wx, int& wy) {
    const int f = kAgentRow - row;
    const int s = col - kAgentCol;
    switch (pose_.dir) {
      case 0: wx = pose_.x + f; wy = pose_.y + s; break;   // east
      case 1: wx = pose_.x - s; wy = pose_.y + f; break;   // south
      case 2: wx = pose_.x - f; wy = pose_.y - s; break;   // west
      default: wx = pose_.x + s; wy = pose_.y - f; break;  // north
    }
  };

  bool vis[kView * kView] = {};
  bool transp[kView * kView] = {};
  for (int row = 0; row < kView; ++row) {
    for (int col = 0; col < kView; ++col) {
      int wx, wy;
      world_of(col, row, wx, wy);
      transp[row * kView + col] = transparent(wx, wy);
    }
  }

  // Light propagation outward from the agent cell. A cell is visible when an
  // orthogonal neighbor closer to the agent (below it, or sideways toward the
  // center column) is visible and transparent; the sweep order guarantees
  // those neighbors are already decided.
  vis[kAgentRow * kView + kAgentCol] = true;
  for (int row = kAgentRow; row >= 0; --row) {
    for (int off = 0; off <= kAgentCol; ++off) {
      for (int sgn : {-1, 1}) {
        if (off == 0 && sgn == 1) continue;
        const int col = kAgentCol + sgn * off;
        if (col < 0 || col >= kView) continue;
        if (row == kAgentRow && col == kAgentCol) continue;
        bool visible = false;
        if (row + 1 < kView) {
          const int below = (row + 1) * kView + col;
          visible = vis[below] && transp[below];
        }
        if (!visible && col != kAgentCol) {
          const int inward = row * kView + (col - sgn);
          visible = vis[inward] && transp[inward];
        }
        vis[row * kView + col] = visible;
      }
    }
  }

  Observation obs;
  obs.carrying_key = carrying_key_;
  for (int row = 0; row < kView; ++row) {
    for (int col = 0; col < kView; ++col) {
      if (!vis[row * kView + col]) continue;
      int wx, wy;
      world_of(col, row, wx, wy);
      if (!in_bounds(wx, wy)) continue;
      const Cell& c = cells_[static_cast<std::size_t>(wy) * width_ + wx];
      CellView& v = obs.at(col, row);
      switch (c.kind) {
        case CellKind::Empty:
          v = {kObjectEmpty, 0, 0};
          break;
        case CellKind::Wall:
          v = {kObjectWall, kColorGrey, 0};
          break;
        case CellKind::Key:
          v = {kObjectKey, kColorYellow, 0};
          break;
        case CellKind::Door:
          v = {kObjectDoor, kColorYellow,
               c.door_state == DoorState::Open     ? kStateOpen
               : c.door_state == DoorState::Closed ? kStateClosed
                                                   : kStateLocked};
          break;
        case CellKind::Goal:
          v = {kObjectGoal, kColorGreen, 0};
          break;
      }
    }
  }
  return obs;
}

std::string GridWorld::render() const {
  static constexpr char kAgentChar[4] = {'>', 'v', '<', '^'};
  std::string out;
  out.reserve(static_cast<std::size_t>(height_) * (width_ + 1));
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (x == pose_.x && y == pose_.y) {
        out += kAgentChar[pose_.dir & 3];
        continue;
      }
      const Cell& c = cells_[static_cast<std::size_t>(y) * width_ + x];
      switch (c.kind) {
        case CellKind::Empty: out += '.'; break;
        case CellKind::Wall: out += '#'; break;
        case CellKind::Key: out += 'K'; break;
        case CellKind::Goal: out += 'G'; break;
        case CellKind::Door:
          out += c.door_state == DoorState::Open     ? 'O'
                 : c.door_state == DoorState::Closed ? 'D'
                                                     : 'L';
          break;
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace imgrid::grid
