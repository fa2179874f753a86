#include <array>

#include "env_internal.hpp"
#include "foilscope/errors.hpp"

namespace foilscope::detail {

namespace {

struct Dir {
  const char* action;   // suffix of move-/push- mnemonics
  const char* noun;  // suffix of directional concepts
  int dr;
  int dc;
};

constexpr std::array<Dir, 4> kDirs = {{
    {"up", "above", -1, 0},
    {"down", "below", 1, 0},
    {"left", "left", 0, -1},
    {"right", "right", 0, 1},
}};

constexpr ActionIndex kNoop = 8;

struct SokobanState {
  int agent = 0;
  int box = 0;
  bool switch_on = false;

  StateHandle pack() const {
    return StateHandle(static_cast<std::uint64_t>(agent) |
                       (static_cast<std::uint64_t>(box) << 8) |
                       (static_cast<std::uint64_t>(switch_on) << 16));
  }
  static SokobanState unpack(StateHandle s) {
    const std::uint64_t raw = s.raw();
    return {static_cast<int>(raw & 0xFF), static_cast<int>((raw >> 8) & 0xFF),
            ((raw >> 16) & 1U) != 0};
  }
};

class Sokoban final : public GridEnvironment {
 public:
  explicit Sokoban(GridMap map) : GridEnvironment(std::move(map)) {
    for (const Dir& d : kDirs) {
      actions_.push_back({std::string("move-") + d.action, static_cast<ActionIndex>(actions_.size())});
    }
    for (const Dir& d : kDirs) {
      actions_.push_back({std::string("push-") + d.action, static_cast<ActionIndex>(actions_.size())});
    }
    actions_.push_back({"noop", kNoop});

    int boxes = 0;
    int targets = 0;
    int switches = 0;
    for (int r = 0; r < height(); ++r) {
      for (int c = 0; c < width(); ++c) {
        const char g = map_.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        if (g == '@') initial_.agent = index(r, c);
        if (g == '$') {
          initial_.box = index(r, c);
          ++boxes;
        }
        if (g == 'T') {
          target_ = index(r, c);
          ++targets;
        }
        if (g == 'G') ++switches;
      }
    }
    if (boxes != 1 || targets != 1) {
      throw ParseError("sokoban maps need exactly one box and one target", 1, 1);
    }
    if (switches > 1) throw ParseError("at most one switch cell", 1, 1);
    has_switch_ = switches == 1;
  }

  StateHandle initial_state() const override { return initial_.pack(); }

  bool is_goal(StateHandle s) const override {
    return s.is_live() && SokobanState::unpack(s).box == target_;
  }

  TransitionOutcome simulate(StateHandle state, ActionIndex action) const override {
    check_action(action);
    if (!state.is_live()) return {StateHandle::failure(), 0.0};
    SokobanState s = SokobanState::unpack(state);
    if (action == kNoop) return {state, 1.0};

    const bool push = action >= 4;
    const Dir& d = kDirs[static_cast<std::size_t>(action % 4)];
    const int ar = s.agent / width();
    const int ac = s.agent % width();
    const int tr = ar + d.dr;
    const int tc = ac + d.dc;
    if (cell(tr, tc) == '#') return {StateHandle::failure(), 0.0};
    const int t = index(tr, tc);

    double cost = 1.0;
    if (!push) {
      if (t == s.box) return {StateHandle::failure(), 0.0};
    } else {
      if (t != s.box) return {StateHandle::failure(), 0.0};
      const int br = tr + d.dr;
      const int bc = tc + d.dc;
      if (cell(br, bc) == '#') return {StateHandle::failure(), 0.0};
      if (variant() == Variant::SokobanSwitchPrec && !s.switch_on) {
        return {StateHandle::failure(), 0.0};
      }
      if (variant() == Variant::SokobanSwitchCost && !s.switch_on) cost = 10.0;
      if (variant() == Variant::SokobanCell && cell(ar, ac) == 'P') cost = 10.0;
      s.box = index(br, bc);
    }
    s.agent = t;
    if (cell(tr, tc) == 'G') s.switch_on = !s.switch_on;
    return {s.pack(), cost};
  }

  std::string describe(StateHandle state) const override {
    if (state.is_failure()) return "failure";
    if (state.is_goal_end()) return "goal reached";
    const SokobanState s = SokobanState::unpack(state);
    std::string out;
    for (int r = 0; r < height(); ++r) {
      for (int c = 0; c < width(); ++c) {
        const int i = index(r, c);
        out += i == s.agent ? '@' : i == s.box ? '$' : cell(r, c);
      }
      out += '\n';
    }
    if (has_switch_) out += s.switch_on ? "switch: on\n" : "switch: off\n";
    return out;
  }

  ConceptVocabulary base_vocabulary() const override {
    ConceptVocabulary v;
    v.add_base("switch_on", [](StateHandle s) { return SokobanState::unpack(s).switch_on; },
               "the switch is on");
    v.add_base("on_switch_cell",
               [this](StateHandle s) { return at(SokobanState::unpack(s).agent) == 'G'; },
               "the agent stands on the switch cell");
    v.add_base("box_on_target",
               [this](StateHandle s) { return SokobanState::unpack(s).box == target_; },
               "the box is on the target");
    for (const Dir& d : kDirs) {
      const std::string sfx = d.noun;
      v.add_base("box_" + sfx,
                 [this, d](StateHandle s) {
                   const auto st = SokobanState::unpack(s);
                   return offset(st.agent, d, 1) == st.box;
                 },
                 "the box is next to the agent");
      v.add_base("wall_" + sfx,
                 [this, d](StateHandle s) {
                   return glyph_at(SokobanState::unpack(s).agent, d, 1) == '#';
                 },
                 "a wall is next to the agent");
      v.add_base("empty_" + sfx,
                 [this, d](StateHandle s) {
                   const auto st = SokobanState::unpack(s);
                   return glyph_at(st.agent, d, 1) != '#' && offset(st.agent, d, 1) != st.box;
                 },
                 "the neighbouring cell is free");
      v.add_base("box_blocked_" + sfx,
                 [this, d](StateHandle s) {
                   const auto st = SokobanState::unpack(s);
                   return offset(st.agent, d, 1) == st.box && glyph_at(st.agent, d, 2) == '#';
                 },
                 "the neighbouring box has a wall behind it");
    }
    if (variant() == Variant::SokobanCell) {
      v.add_base("on_pink_cell",
                 [this](StateHandle s) { return at(SokobanState::unpack(s).agent) == 'P'; },
                 "the agent stands on a pink cell");
      v.add_base("box_on_pink_cell",
                 [this](StateHandle s) { return at(SokobanState::unpack(s).box) == 'P'; },
                 "the box is on a pink cell");
    }
    return v;
  }

  GroundTruth ground_truth() const override {
    GroundTruth gt;
    for (const Dir& d : kDirs) {
      const std::string sfx = d.noun;
      gt.preconditions[std::string("move-") + d.action] = {"empty_" + sfx, "not_wall_" + sfx,
                                                          "not_box_" + sfx};
      auto& push = gt.preconditions[std::string("push-") + d.action];
      push = {"box_" + sfx, "not_box_blocked_" + sfx, "not_wall_" + sfx, "not_empty_" + sfx};
      if (variant() == Variant::SokobanSwitchPrec) push.push_back("switch_on");
      if (variant() == Variant::SokobanSwitchCost) {
        gt.cost_rules.push_back({std::string("push-") + d.action, {"not_switch_on"}, 10.0});
      }
      if (variant() == Variant::SokobanCell) {
        gt.cost_rules.push_back({std::string("push-") + d.action, {"on_pink_cell"}, 10.0});
      }
    }
    gt.preconditions["noop"] = {};
    gt.preconditions[std::string(kAchieveGoal)] = {"box_on_target"};
    for (const ActionId& a : actions_) gt.default_cost[a.label] = 1.0;
    gt.default_cost[std::string(kAchieveGoal)] = 0.0;
    return gt;
  }

  std::vector<StateHandle> all_states() const override {
    std::vector<StateHandle> out;
    for (int sw = 0; sw <= (has_switch_ ? 1 : 0); ++sw) {
      for (int a = 0; a < width() * height(); ++a) {
        if (at(a) == '#') continue;
        for (int b = 0; b < width() * height(); ++b) {
          if (b == a || at(b) == '#') continue;
          out.push_back(SokobanState{a, b, sw == 1}.pack());
        }
      }
    }
    return out;
  }

 private:
  char at(int idx) const { return cell(idx / width(), idx % width()); }
  int offset(int idx, const Dir& d, int k) const {
    const int r = idx / width() + d.dr * k;
    const int c = idx % width() + d.dc * k;
    return in_bounds(r, c) ? index(r, c) : -1;
  }
  char glyph_at(int idx, const Dir& d, int k) const {
    return cell(idx / width() + d.dr * k, idx % width() + d.dc * k);
  }

  SokobanState initial_;
  int target_ = 0;
  bool has_switch_ = false;
};

}  // namespace

std::shared_ptr<GridEnvironment> make_sokoban(GridMap map) {
  return std::make_shared<Sokoban>(std::move(map));
}

}  // namespace foilscope::detail
