#include "faps/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "faps/rng.hpp"

namespace faps {

void Trainer::on_policy_change(const AlignmentPolicy&, const AlignmentPolicy&) {}

void SyntheticTrainerConfig::validate() const {
  if (!(peak_acc > 0.0 && peak_acc <= 1.0))
    throw std::invalid_argument("synthetic trainer: peak_acc must be in (0, 1]");
  if (!(curve_tau > 0.0)) throw std::invalid_argument("synthetic trainer: curve_tau must be positive");
  if (penalty_m < 0.0 || penalty_delta < 0.0)
    throw std::invalid_argument("synthetic trainer: penalties must be nonnegative");
  if (noise_sigma < 0.0)
    throw std::invalid_argument("synthetic trainer: noise_sigma must be nonnegative");
}

SyntheticTrainer::SyntheticTrainer(const SyntheticTrainerConfig& cfg, int s_m, int s_delta,
                                   std::uint64_t noise_root)
    : cfg_(cfg), s_m_(s_m), s_delta_(s_delta), noise_root_(noise_root) {
  cfg_.validate();
  if (s_m_ <= 0 || s_delta_ <= 0)
    throw std::invalid_argument("synthetic trainer: step magnitudes must be positive");
}

void SyntheticTrainer::step(const AlignmentPolicy&) { ++progress_; }

double SyntheticTrainer::eval(const AlignmentPolicy& policy) const {
  const double ramp = -std::expm1(-static_cast<double>(progress_) / cfg_.curve_tau);
  const double quality =
      cfg_.peak_acc -
      cfg_.penalty_m * std::abs(policy.m - cfg_.optimum.m) / static_cast<double>(s_m_) -
      cfg_.penalty_delta * std::abs(policy.delta - cfg_.optimum.delta) / static_cast<double>(s_delta_);
  double acc = ramp * quality;
  if (cfg_.noise_sigma > 0.0) {
    // Counter-based draw keyed on training progress: eval stays pure, clones
    // replay the same noise at the same progress, and members with identical
    // (seed, id) histories see identical sequences.
    Rng noise(mix_seed(noise_root_, static_cast<std::uint64_t>(progress_)));
    acc += cfg_.noise_sigma * noise.gaussian();
  }
  return std::clamp(acc, 0.0, 1.0);
}

std::unique_ptr<Trainer> SyntheticTrainer::clone() const {
  return std::make_unique<SyntheticTrainer>(*this);
}

TrainerFactory make_synthetic_factory(const SyntheticTrainerConfig& cfg, const SearchSpace& space,
                                      std::uint64_t master_seed) {
  cfg.validate();
  space.validate();
  return [cfg, s_m = space.s_m, s_delta = space.s_delta, master_seed](int member_id) {
    const std::uint64_t root =
        mix_seed(master_seed, StreamDomain::trainer_noise, static_cast<std::uint64_t>(member_id));
    return std::make_unique<SyntheticTrainer>(cfg, s_m, s_delta, root);
  };
}

GridResult run_grid(const SearchSpace& space, const TrainerFactory& factory, int epochs) {
  if (epochs <= 0) throw std::invalid_argument("run_grid: epochs must be positive");
  const std::vector<AlignmentPolicy> candidates = enumerate_space(space);

  GridResult result;
  result.table.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto trainer = factory(static_cast<int>(i));
    for (int e = 0; e < epochs; ++e) {
      trainer->step(candidates[i]);
      ++result.trainer_steps;
    }
    result.table.push_back({candidates[i], trainer->eval(candidates[i])});
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.table.size(); ++i)
    if (result.table[i].accuracy > result.table[best].accuracy) best = i;
  result.best_policy = result.table[best].policy;
  result.best_accuracy = result.table[best].accuracy;
  return result;
}

}  // namespace faps
