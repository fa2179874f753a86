#include "env_internal.hpp"
#include "foilscope/errors.hpp"

namespace foilscope::detail {

namespace {

enum KqAction : ActionIndex {
  kMoveLeft,
  kMoveRight,
  kMoveUp,
  kMoveDown,
  kJumpLeft,
  kJumpRight,
  kAttack,
  kNoop,
};

constexpr double kAttackCost = 500.0;

struct KqState {
  int agent = 0;
  bool skull_alive = false;
  int crab_col = 0;
  int crab_dir = 1;  // +1 right, -1 left

  StateHandle pack() const {
    return StateHandle(static_cast<std::uint64_t>(agent) |
                       (static_cast<std::uint64_t>(skull_alive) << 8) |
                       (static_cast<std::uint64_t>(crab_col) << 9) |
                       (static_cast<std::uint64_t>(crab_dir > 0) << 13));
  }
  static KqState unpack(StateHandle s) {
    const std::uint64_t raw = s.raw();
    return {static_cast<int>(raw & 0xFF), ((raw >> 8) & 1U) != 0,
            static_cast<int>((raw >> 9) & 0xF), ((raw >> 13) & 1U) ? 1 : -1};
  }
};

/// Multi-platform grid with a static skull, ladders, ropes and an optional
/// patrolling crab. Ropes can be descended and jumped from but not climbed.
/// The crab moves one cell per agent step and turns around at walls, drops,
/// the key cell and the agent.
class KeyQuest final : public GridEnvironment {
 public:
  explicit KeyQuest(GridMap map) : GridEnvironment(std::move(map)) {
    for (const char* label : {"move-left", "move-right", "move-up", "move-down", "jump-left",
                              "jump-right", "attack", "noop"}) {
      actions_.push_back({label, static_cast<ActionIndex>(actions_.size())});
    }
    int keys = 0;
    int skulls = 0;
    int crabs = 0;
    for (int r = 0; r < height(); ++r) {
      for (int c = 0; c < width(); ++c) {
        const char g = map_.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        if (g == '@') initial_.agent = index(r, c);
        if (g == 'K') ++keys;
        if (g == 'S') {
          skull_ = index(r, c);
          ++skulls;
        }
        if (g == 'C') {
          crab_row_ = r;
          initial_.crab_col = c;
          ++crabs;
        }
      }
    }
    if (keys < 1) throw ParseError("key-quest maps need a key cell", 1, 1);
    if (skulls > 1 || crabs > 1) throw ParseError("at most one skull and one crab", 1, 1);
    initial_.skull_alive = skulls == 1;
    initial_.crab_dir = -1;
  }

  StateHandle initial_state() const override { return initial_.pack(); }

  bool is_goal(StateHandle s) const override {
    return s.is_live() && at(KqState::unpack(s).agent) == 'K';
  }

  TransitionOutcome simulate(StateHandle state, ActionIndex action) const override {
    check_action(action);
    if (!state.is_live()) return {StateHandle::failure(), 0.0};
    KqState s = KqState::unpack(state);
    const int r = s.agent / width();
    const int c = s.agent % width();
    const auto fail = TransitionOutcome{StateHandle::failure(), 0.0};
    double cost = 1.0;
    int target = s.agent;

    switch (action) {
      case kMoveLeft:
      case kMoveRight: {
        const int tc = c + (action == kMoveLeft ? -1 : 1);
        if (cell(r, c) == 'R' || !enterable(s, r, tc)) return fail;
        target = index(r, tc);
        break;
      }
      case kMoveUp:
        if (cell(r, c) != 'L' || !enterable(s, r - 1, c)) return fail;
        target = index(r - 1, c);
        break;
      case kMoveDown:
        if (!climbable(r + 1, c) || skull_at(s, r + 1, c) || crab_hits(s, r + 1, c)) return fail;
        target = index(r + 1, c);
        break;
      case kJumpLeft:
      case kJumpRight: {
        const int dc = action == kJumpLeft ? -1 : 1;
        if (solid(r, c + dc) || !enterable(s, r, c + 2 * dc)) return fail;
        target = index(r, c + 2 * dc);
        break;
      }
      case kAttack:
        if (s.skull_alive && (skull_ == s.agent - 1 || skull_ == s.agent + 1)) {
          cost = kAttackCost;
          s.skull_alive = false;
        }
        break;
      default:
        break;
    }
    step_crab(s);
    s.agent = target;
    return {s.pack(), cost};
  }

  std::string describe(StateHandle state) const override {
    if (state.is_failure()) return "failure";
    if (state.is_goal_end()) return "goal reached";
    const KqState s = KqState::unpack(state);
    std::string out;
    for (int r = 0; r < height(); ++r) {
      for (int c = 0; c < width(); ++c) {
        const int i = index(r, c);
        char g = cell(r, c) == 'S' ? '.' : cell(r, c);
        if (skull_at(s, r, c)) g = 'S';
        if (has_crab() && r == crab_row_ && c == s.crab_col) g = 'C';
        if (i == s.agent) g = '@';
        out += g;
      }
      out += '\n';
    }
    return out;
  }

  ConceptVocabulary base_vocabulary() const override {
    ConceptVocabulary v;
    auto add = [&](const char* name, const char* desc, auto pred) {
      v.add_base(name,
                 [this, pred](StateHandle h) {
                   const KqState s = KqState::unpack(h);
                   return pred(s, s.agent / width(), s.agent % width());
                 },
                 desc);
    };
    add("on_rope", "the agent hangs on a rope",
        [this](const KqState&, int r, int c) { return cell(r, c) == 'R'; });
    add("on_ladder", "the agent is on a ladder",
        [this](const KqState&, int r, int c) { return cell(r, c) == 'L'; });
    add("climbable_below", "a ladder or rope continues below the agent",
        [this](const KqState&, int r, int c) { return climbable(r + 1, c); });
    add("wall_above", "a wall is directly above the agent",
        [this](const KqState&, int r, int c) { return solid(r - 1, c); });
    add("wall_on_left", "a wall is directly left of the agent",
        [this](const KqState&, int r, int c) { return solid(r, c - 1); });
    add("wall_on_right", "a wall is directly right of the agent",
        [this](const KqState&, int r, int c) { return solid(r, c + 1); });
    add("skull_on_left", "the skull is directly left of the agent",
        [this](const KqState& s, int r, int c) { return skull_at(s, r, c - 1); });
    add("skull_on_right", "the skull is directly right of the agent",
        [this](const KqState& s, int r, int c) { return skull_at(s, r, c + 1); });
    add("on_left_ledge", "stepping left would fall",
        [this](const KqState&, int r, int c) { return !solid(r, c - 1) && !supported(r, c - 1); });
    add("on_right_ledge", "stepping right would fall",
        [this](const KqState&, int r, int c) { return !solid(r, c + 1) && !supported(r, c + 1); });
    add("can_land_left", "two cells to the left are a safe landing spot",
        [this](const KqState& s, int r, int c) { return enterable(s, r, c - 2); });
    add("can_land_right", "two cells to the right are a safe landing spot",
        [this](const KqState& s, int r, int c) { return enterable(s, r, c + 2); });
    add("has_key", "the agent stands on the key",
        [this](const KqState&, int r, int c) { return cell(r, c) == 'K'; });
    add("is_clear_down_of_crab", "the crab will not be below the agent",
        [this](const KqState& s, int r, int c) { return !crab_hits(s, r + 1, c); });
    add("is_clear_left_of_crab", "the crab will not be left of the agent",
        [this](const KqState& s, int r, int c) { return !crab_hits(s, r, c - 1); });
    add("is_clear_right_of_crab", "the crab will not be right of the agent",
        [this](const KqState& s, int r, int c) { return !crab_hits(s, r, c + 1); });
    return v;
  }

  GroundTruth ground_truth() const override {
    GroundTruth gt;
    gt.preconditions["move-left"] = {"not_on_rope", "not_wall_on_left", "not_skull_on_left",
                                     "not_on_left_ledge", "is_clear_left_of_crab"};
    gt.preconditions["move-right"] = {"not_on_rope", "not_wall_on_right", "not_skull_on_right",
                                      "not_on_right_ledge", "is_clear_right_of_crab"};
    gt.preconditions["move-up"] = {"on_ladder", "not_wall_above"};
    gt.preconditions["move-down"] = {"climbable_below", "is_clear_down_of_crab"};
    gt.preconditions["jump-left"] = {"not_wall_on_left", "can_land_left"};
    gt.preconditions["jump-right"] = {"not_wall_on_right", "can_land_right"};
    gt.preconditions["attack"] = {};
    gt.preconditions["noop"] = {};
    gt.preconditions[std::string(kAchieveGoal)] = {"has_key"};
    gt.cost_rules.push_back({"attack", {"skull_on_left"}, kAttackCost});
    gt.cost_rules.push_back({"attack", {"skull_on_right"}, kAttackCost});
    for (const ActionId& a : actions_) gt.default_cost[a.label] = 1.0;
    gt.default_cost[std::string(kAchieveGoal)] = 0.0;
    return gt;
  }

  std::vector<StateHandle> all_states() const override {
    std::vector<StateHandle> out;
    const int skull_modes = skull_ >= 0 ? 2 : 1;
    for (int a = 0; a < width() * height(); ++a) {
      const int r = a / width();
      const int c = a % width();
      if (solid(r, c) || !supported(r, c)) continue;
      for (int sk = 0; sk < skull_modes; ++sk) {
        const bool alive = skull_ >= 0 && sk == 1;
        if (alive && a == skull_) continue;
        if (!has_crab()) {
          out.push_back(KqState{a, alive, 0, -1}.pack());
          continue;
        }
        for (int cc = 0; cc < width(); ++cc) {
          if (solid(crab_row_, cc) || (r == crab_row_ && c == cc)) continue;
          for (int dir : {-1, 1}) out.push_back(KqState{a, alive, cc, dir}.pack());
        }
      }
    }
    return out;
  }

 private:
  char at(int idx) const { return cell(idx / width(), idx % width()); }
  bool solid(int r, int c) const { return cell(r, c) == '#'; }
  bool climbable(int r, int c) const {
    const char g = cell(r, c);
    return g == 'L' || g == 'R';
  }
  bool grounded(int r, int c) const {
    return solid(r + 1, c) || (cell(r + 1, c) == 'L' && cell(r, c) != 'L');
  }
  bool supported(int r, int c) const { return grounded(r, c) || climbable(r, c); }
  bool skull_at(const KqState& s, int r, int c) const {
    return s.skull_alive && in_bounds(r, c) && index(r, c) == skull_;
  }
  bool has_crab() const { return crab_row_ >= 0; }

  /// Crab column after one step, treating the agent's current cell as blocked.
  std::pair<int, int> crab_next(const KqState& s) const {
    auto blocked = [&](int col) {
      return solid(crab_row_, col) || !grounded(crab_row_, col) ||
             cell(crab_row_, col) == 'K' || index(crab_row_, col) == s.agent;
    };
    int dir = s.crab_dir;
    if (blocked(s.crab_col + dir)) {
      dir = -dir;
      if (blocked(s.crab_col + dir)) return {s.crab_col, dir};
    }
    return {s.crab_col + dir, dir};
  }
  bool crab_hits(const KqState& s, int r, int c) const {
    if (!has_crab() || r != crab_row_) return false;
    return c == s.crab_col || c == crab_next(s).first;
  }
  void step_crab(KqState& s) const {
    if (!has_crab()) return;
    const auto [col, dir] = crab_next(s);
    s.crab_col = col;
    s.crab_dir = dir;
  }
  /// The agent may end a step in (r, c).
  bool enterable(const KqState& s, int r, int c) const {
    return !solid(r, c) && !skull_at(s, r, c) && supported(r, c) && !crab_hits(s, r, c);
  }

  KqState initial_;
  int skull_ = -1;
  int crab_row_ = -1;
};

}  // namespace

std::shared_ptr<GridEnvironment> make_key_quest(GridMap map) {
  return std::make_shared<KeyQuest>(std::move(map));
}

}  // namespace foilscope::detail
