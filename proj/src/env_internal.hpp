#pragma once

#include <memory>

#include "foilscope/environments.hpp"

namespace foilscope::detail {

inline constexpr int kMaxGridSide = 16;

std::shared_ptr<GridEnvironment> make_sokoban(GridMap map);
std::shared_ptr<GridEnvironment> make_key_quest(GridMap map);

/// Terrain with dynamic glyphs (agent, box, crab) replaced by floor.
char terrain_glyph(char c);

}  // namespace foilscope::detail
