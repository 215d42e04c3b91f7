#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "faps/geometry.hpp"

namespace faps {

/// Opaque training state: steppable, evaluable, clonable. eval must be free
/// of side effects, and a clone's subsequent evolution is independent of its
/// source. Implementations must not share hidden mutable globals, so states
/// can move freely between workers.
class Trainer {
 public:
  virtual ~Trainer() = default;

  /// Train one epoch under the given alignment policy.
  virtual void step(const AlignmentPolicy& policy) = 0;

  /// Validation accuracy in [0, 1] for the current state under `policy`.
  virtual double eval(const AlignmentPolicy& policy) const = 0;

  virtual std::unique_ptr<Trainer> clone() const = 0;

  /// Fired by the search engine whenever it assigns this state a new policy.
  /// Real trainers recalculate input-dependent statistics (e.g. batch
  /// normalization) here; the default and the synthetic trainer do nothing.
  virtual void on_policy_change(const AlignmentPolicy& old_policy,
                                const AlignmentPolicy& new_policy);
};

using TrainerFactory = std::function<std::unique_ptr<Trainer>(int member_id)>;

/// Accuracy surface for the synthetic trainer:
///   clamp01[ (1 - exp(-t/tau)) * (peak - c_m*|m - m*|/s_m - c_d*|d - d*|/s_d) + noise ]
/// With noise_sigma = 0 the surface is deterministic and, when both penalties
/// are positive, has its unique argmax at `optimum`.
struct SyntheticTrainerConfig {
  AlignmentPolicy optimum{192, 4};
  double peak_acc{0.9};
  double curve_tau{5.0};
  double penalty_m{0.01};
  double penalty_delta{0.01};
  double noise_sigma{0.0};

  void validate() const;
};

class SyntheticTrainer : public Trainer {
 public:
  SyntheticTrainer(const SyntheticTrainerConfig& cfg, int s_m, int s_delta,
                   std::uint64_t noise_root);

  void step(const AlignmentPolicy& policy) override;
  double eval(const AlignmentPolicy& policy) const override;
  std::unique_ptr<Trainer> clone() const override;

  /// Epochs of accumulated training progress; survives policy changes.
  int progress() const { return progress_; }

 private:
  SyntheticTrainerConfig cfg_;
  int s_m_;
  int s_delta_;
  std::uint64_t noise_root_;
  int progress_{0};
};

/// Factory wiring member ids to per-member noise substreams of `master_seed`.
/// Penalty distances are measured in units of the space's step magnitudes.
TrainerFactory make_synthetic_factory(const SyntheticTrainerConfig& cfg, const SearchSpace& space,
                                      std::uint64_t master_seed);

struct GridRow {
  AlignmentPolicy policy;
  double accuracy;
};

struct GridResult {
  AlignmentPolicy best_policy;
  double best_accuracy{0.0};
  std::vector<GridRow> table;  // enumeration order, one row per candidate
  long long trainer_steps{0};
};

/// Exhaustive baseline: one independent state per candidate, trained for
/// `epochs` steps and evaluated once. Ground-truth argmax and cost yardstick
/// for the population search.
GridResult run_grid(const SearchSpace& space, const TrainerFactory& factory, int epochs);

}  // namespace faps
