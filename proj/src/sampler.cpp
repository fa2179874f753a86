#include "foilscope/sampler.hpp"

#include <algorithm>

#include "foilscope/errors.hpp"

namespace foilscope {

StateSampler::StateSampler(const BlackBoxModel& model, SamplerConfig config)
    : model_(model), config_(std::move(config)), actions_(model.exploration_actions()) {
  if (config_.walk_length < 0) throw ContractViolation("walk_length must be non-negative");
  if (config_.budget > 0 && config_.anchors.empty()) {
    throw ContractViolation("sampler needs at least one anchor");
  }
  for (StateHandle a : config_.anchors) {
    if (!a.is_live()) throw ContractViolation("sampler anchors must be live states");
  }
  call_cap_ = config_.budget * static_cast<std::size_t>(std::max(config_.walk_length, 1));
}

void StateSampler::start_episode() {
  rng_.emplace(derive_seed(config_.seed, stats_.episodes));
  ++stats_.episodes;
  current_ = config_.anchors[rng_->index(config_.anchors.size())];
  steps_left_ = config_.walk_length;
}

std::optional<StateHandle> StateSampler::next() {
  if (stats_.emitted >= config_.budget) return std::nullopt;
  while (true) {
    if (!rng_) {
      start_episode();
      ++stats_.emitted;
      return current_;
    }
    if (steps_left_ == 0 || actions_.empty()) {
      rng_.reset();
      continue;
    }
    if (stats_.simulate_calls >= call_cap_) return std::nullopt;
    const ActionIndex a = actions_[rng_->index(actions_.size())];
    const TransitionOutcome out = model_.simulate(current_, a);
    ++stats_.simulate_calls;
    --steps_left_;
    if (!out.next.is_live()) {
      rng_.reset();
      continue;
    }
    current_ = out.next;
    ++stats_.emitted;
    return current_;
  }
}

std::vector<StateHandle> sample_states(const BlackBoxModel& model, const SamplerConfig& config,
                                       SampleStats* stats) {
  StateSampler sampler(model, config);
  std::vector<StateHandle> out;
  while (auto s = sampler.next()) out.push_back(*s);
  if (stats) *stats = sampler.stats();
  return out;
}

std::vector<ExecutableSample> sample_executable(const BlackBoxModel& model,
                                                const SamplerConfig& config, ActionIndex action,
                                                SampleStats* stats) {
  StateSampler sampler(model, config);
  std::vector<ExecutableSample> out;
  std::size_t i = 0;
  while (auto s = sampler.next()) {
    const TransitionOutcome o = model.simulate(*s, action);
    if (!o.failed()) out.push_back({*s, o, i});
    ++i;
  }
  if (stats) *stats = sampler.stats();
  return out;
}

}  // namespace foilscope
