#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "foilscope/model.hpp"
#include "foilscope/rng.hpp"

namespace foilscope {

inline constexpr int kDefaultWalkLength = 10;
inline constexpr std::size_t kDefaultPreconditionBudget = 500;
inline constexpr std::size_t kDefaultCostBudget = 750;

struct SamplerConfig {
  std::vector<StateHandle> anchors;
  int walk_length = kDefaultWalkLength;
  /// Number of emitted states.
  std::size_t budget = kDefaultPreconditionBudget;
  std::uint64_t seed = 0;
};

struct SampleStats {
  std::size_t emitted = 0;
  std::size_t simulate_calls = 0;
  std::size_t episodes = 0;
};

/// Seeded random walks from the anchors. Each episode picks an anchor
/// uniformly, emits it, then takes up to walk_length uniformly random
/// exploration actions, emitting every state reached. A ⊥ outcome ends the
/// episode and a fresh one starts. Episode randomness is derived from
/// (seed, episode index), so streams depend only on the config.
///
/// Simulate calls never exceed budget * max(walk_length, 1); the stream may
/// end early to honour that cap.
class StateSampler {
 public:
  StateSampler(const BlackBoxModel& model, SamplerConfig config);

  std::optional<StateHandle> next();
  const SampleStats& stats() const { return stats_; }

 private:
  void start_episode();

  const BlackBoxModel& model_;
  SamplerConfig config_;
  std::vector<ActionIndex> actions_;
  SampleStats stats_;
  std::optional<Rng> rng_;
  StateHandle current_;
  int steps_left_ = 0;
  std::size_t call_cap_ = 0;
};

std::vector<StateHandle> sample_states(const BlackBoxModel& model,
                                       const SamplerConfig& config,
                                       SampleStats* stats = nullptr);

struct ExecutableSample {
  StateHandle state;
  TransitionOutcome outcome;
  /// Position of the state in the raw stream.
  std::size_t sample_index = 0;
};

/// States of the raw stream where `action` does not lead to ⊥, paired with the
/// outcome. The budget counts raw samples, not executable ones.
std::vector<ExecutableSample> sample_executable(const BlackBoxModel& model,
                                                const SamplerConfig& config,
                                                ActionIndex action,
                                                SampleStats* stats = nullptr);

}  // namespace foilscope
