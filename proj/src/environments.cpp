#include "foilscope/environments.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "env_internal.hpp"
#include "foilscope/errors.hpp"

namespace foilscope {

namespace {

constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::SokobanSwitchPrec, "sokoban-switch-prec"},
    {Variant::SokobanSwitchCost, "sokoban-switch-cost"},
    {Variant::SokobanCell, "sokoban-cell"},
    {Variant::KeyQuest, "key-quest"},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

bool glyph_allowed(Variant v, char c) {
  static constexpr std::string_view kCommon = "#.@E";
  static constexpr std::string_view kSokoban = "$TGP";
  static constexpr std::string_view kKeyQuest = "KSLRC";
  if (kCommon.find(c) != std::string_view::npos) return true;
  if (is_sokoban(v)) return kSokoban.find(c) != std::string_view::npos;
  return kKeyQuest.find(c) != std::string_view::npos;
}

}  // namespace

std::string_view variant_name(Variant v) {
  for (const auto& [variant, name] : kVariantNames) {
    if (variant == v) return name;
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (const auto& [variant, n] : kVariantNames) {
    if (n == name) return variant;
  }
  return std::nullopt;
}

std::vector<std::string> GridMap::header_values(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : header) {
    if (k == key) out.push_back(v);
  }
  return out;
}

GridMap parse_map_text(std::string_view text) {
  GridMap map;
  bool have_variant = false;
  const auto lines = split_lines(text);
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    const int lineno = static_cast<int>(i) + 1;
    if (line.empty()) continue;
    if (line.front() == '#') break;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected key=value header or grid row", lineno, 1);
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key == "variant") {
      auto v = parse_variant(value);
      if (!v) {
        throw ParseError("unknown variant '" + value + "'", lineno,
                         static_cast<int>(eq) + 2);
      }
      map.variant = *v;
      have_variant = true;
    }
    map.header.emplace_back(std::move(key), std::move(value));
  }
  if (!have_variant) throw ParseError("missing variant header", 1, 1);

  const std::size_t first_row = i;
  for (; i < lines.size(); ++i) {
    std::string_view row = lines[i];
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    const int lineno = static_cast<int>(i) + 1;
    if (trim(row).empty()) {
      // Trailing blank lines are fine; blank lines inside the grid are not.
      for (std::size_t j = i; j < lines.size(); ++j) {
        if (!trim(lines[j]).empty()) {
          throw ParseError("blank line inside grid", lineno, 1);
        }
      }
      break;
    }
    if (!map.rows.empty() && row.size() != map.rows.front().size()) {
      throw ParseError("grid is not rectangular", lineno,
                       static_cast<int>(std::min(row.size(), map.rows.front().size())) + 1);
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!glyph_allowed(map.variant, row[c])) {
        throw ParseError(std::string("unexpected glyph '") + row[c] + "'", lineno,
                         static_cast<int>(c) + 1);
      }
    }
    map.rows.emplace_back(row);
  }
  if (map.rows.empty()) throw ParseError("map has no grid", static_cast<int>(first_row) + 1, 1);
  if (map.height() < 3 || map.width() < 3 || map.height() > detail::kMaxGridSide ||
      map.width() > detail::kMaxGridSide) {
    throw ParseError("grid must be between 3 and 16 cells on each side",
                     static_cast<int>(first_row) + 1, 1);
  }

  int agents = 0;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const char g = map.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      const int lineno = static_cast<int>(first_row) + r + 1;
      const bool border = r == 0 || c == 0 || r == map.height() - 1 || c == map.width() - 1;
      if (border && g != '#') throw ParseError("outer boundary must be wall", lineno, c + 1);
      if (g == '@') ++agents;
    }
  }
  if (agents != 1) {
    throw ParseError("map must contain exactly one agent, found " + std::to_string(agents),
                     static_cast<int>(first_row) + 1, 1);
  }
  return map;
}

const std::vector<std::string>& GroundTruth::preconditions_of(std::string_view action) const {
  static const std::vector<std::string> kNone;
  auto it = preconditions.find(std::string(action));
  return it == preconditions.end() ? kNone : it->second;
}

double GroundTruth::cost_of(std::string_view action, const ConceptVocabulary& vocab,
                            const ConceptVector& before) const {
  auto it = default_cost.find(std::string(action));
  double cost = it == default_cost.end() ? 1.0 : it->second;
  for (const CostRule& rule : cost_rules) {
    if (rule.action != action) continue;
    auto ids = resolve_concepts(vocab, rule.concepts);
    if (ids && before.contains(*ids)) cost = std::max(cost, rule.cost);
  }
  return cost;
}

char GridEnvironment::cell(int r, int c) const {
  if (!in_bounds(r, c)) return '#';
  return detail::terrain_glyph(
      map_.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
}

GoalTest GridEnvironment::goal_test() const {
  return [this](StateHandle s) { return is_goal(s); };
}

char detail::terrain_glyph(char c) {
  switch (c) {
    case '@':
    case '$':
    case 'C':
    case 'E':
      return '.';
    default:
      return c;
  }
}

std::shared_ptr<GridEnvironment> make_environment(GridMap map,
                                                  std::optional<Variant> variant_override) {
  if (variant_override) {
    if (is_sokoban(*variant_override) != is_sokoban(map.variant)) {
      throw ContractViolation("variant override must stay within the same family");
    }
    map.variant = *variant_override;
  }
  if (is_sokoban(map.variant)) return detail::make_sokoban(std::move(map));
  return detail::make_key_quest(std::move(map));
}

std::shared_ptr<GridEnvironment> parse_grid(std::string_view text,
                                            std::optional<Variant> variant_override) {
  return make_environment(parse_map_text(text), variant_override);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<GridEnvironment> load_map_file(const std::string& path,
                                               std::optional<Variant> variant_override) {
  return parse_grid(read_text_file(path), variant_override);
}

std::vector<ActionIndex> parse_action_sequence(const BlackBoxModel& model,
                                               std::string_view text) {
  std::vector<ActionIndex> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (auto semi = line.find(';'); semi != std::string_view::npos) line = line.substr(0, semi);
    line = trim(line);
    if (line.empty()) continue;
    auto a = model.find_action(line);
    if (!a) {
      throw ParseError("unknown action '" + std::string(line) + "'",
                       static_cast<int>(i) + 1, 1);
    }
    out.push_back(*a);
  }
  return out;
}

std::vector<ActionIndex> load_action_file(const BlackBoxModel& model,
                                          const std::string& path) {
  return parse_action_sequence(model, read_text_file(path));
}

std::optional<std::vector<ConceptIndex>> resolve_concepts(
    const ConceptVocabulary& vocab, const std::vector<std::string>& names) {
  std::vector<ConceptIndex> out;
  for (const auto& n : names) {
    auto c = vocab.find(n);
    if (!c) return std::nullopt;
    out.push_back(*c);
  }
  return out;
}

}  // namespace foilscope
