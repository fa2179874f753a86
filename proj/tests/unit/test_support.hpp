#pragma once

#include <string>

#include "foilscope/experiments.hpp"

namespace foilscope::test {

inline std::string maps_dir() { return FOILSCOPE_MAPS_DIR; }

inline std::string map_path(const std::string& name) { return maps_dir() + "/" + name; }

inline LoadedScenario scenario(const std::string& id) {
  return load_scenario(find_scenario(id), maps_dir());
}

}  // namespace foilscope::test
