#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "foilscope/concepts.hpp"
#include "foilscope/model.hpp"

namespace foilscope {

enum class Variant { SokobanSwitchPrec, SokobanSwitchCost, SokobanCell, KeyQuest };

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
inline bool is_sokoban(Variant v) { return v != Variant::KeyQuest; }

/// Parsed map text. Header lines are `key=value`; the grid starts at the first
/// line beginning with `#`.
struct GridMap {
  Variant variant = Variant::SokobanSwitchPrec;
  std::vector<std::string> rows;
  std::vector<std::pair<std::string, std::string>> header;

  int width() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
  int height() const { return static_cast<int>(rows.size()); }
  std::vector<std::string> header_values(std::string_view key) const;
};

/// Throws ParseError with the offending line and column.
GridMap parse_map_text(std::string_view text);

struct CostRule {
  std::string action;
  std::vector<std::string> concepts;
  double cost = 0.0;
};

/// Analytically known model components, stated over concept names so they can
/// be resolved against any vocabulary.
struct GroundTruth {
  /// Necessary concepts per action whose conjunction is also sufficient.
  std::map<std::string, std::vector<std::string>> preconditions;
  /// Actions whose cost is not the unit default.
  std::vector<CostRule> cost_rules;
  std::map<std::string, double> default_cost;

  const std::vector<std::string>& preconditions_of(std::string_view action) const;
  /// Cost of an action given the concepts true before it.
  double cost_of(std::string_view action, const ConceptVocabulary& vocab,
                 const ConceptVector& before) const;
};

class GridEnvironment : public BlackBoxModel {
 public:
  explicit GridEnvironment(GridMap map) : map_(std::move(map)) {}

  Variant variant() const { return map_.variant; }
  const GridMap& map() const { return map_; }
  int width() const { return map_.width(); }
  int height() const { return map_.height(); }

  std::span<const ActionId> actions() const override { return actions_; }

  virtual StateHandle initial_state() const = 0;
  virtual bool is_goal(StateHandle s) const = 0;
  GoalTest goal_test() const;
  /// Grid rendering of a state, one line per row.
  virtual std::string describe(StateHandle s) const = 0;
  /// Base concepts with detectors; callers usually add negations.
  virtual ConceptVocabulary base_vocabulary() const = 0;
  ConceptVocabulary vocabulary() const { return extend_with_negations(base_vocabulary()); }
  virtual GroundTruth ground_truth() const = 0;
  /// Every live state the environment can represent, when small enough to
  /// enumerate. Used by exhaustive checks.
  virtual std::vector<StateHandle> all_states() const = 0;

 protected:
  char cell(int r, int c) const;
  bool in_bounds(int r, int c) const {
    return r >= 0 && c >= 0 && r < height() && c < width();
  }
  int index(int r, int c) const { return r * width() + c; }

  GridMap map_;
  std::vector<ActionId> actions_;
};

std::shared_ptr<GridEnvironment> make_environment(
    GridMap map, std::optional<Variant> variant_override = std::nullopt);
std::shared_ptr<GridEnvironment> parse_grid(
    std::string_view text, std::optional<Variant> variant_override = std::nullopt);
std::shared_ptr<GridEnvironment> load_map_file(
    const std::string& path, std::optional<Variant> variant_override = std::nullopt);

std::string read_text_file(const std::string& path);
/// One mnemonic per line; blank lines and `;` comments are skipped. Throws
/// ParseError for unknown mnemonics.
std::vector<ActionIndex> parse_action_sequence(const BlackBoxModel& model,
                                               std::string_view text);
std::vector<ActionIndex> load_action_file(const BlackBoxModel& model,
                                          const std::string& path);

/// Resolves concept names, returning nullopt when any is missing.
std::optional<std::vector<ConceptIndex>> resolve_concepts(
    const ConceptVocabulary& vocab, const std::vector<std::string>& names);

}  // namespace foilscope
