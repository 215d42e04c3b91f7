#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "faps/geometry.hpp"
#include "faps/rng.hpp"
#include "faps/trainer.hpp"

namespace faps {

enum class EventKind { step, eval, exploit, explore, crossover, clip };
const char* to_string(EventKind kind);

/// One engine action. Serialized as a JSON line in deterministic runs the
/// whole stream is byte-reproducible for a given seed.
struct EventRecord {
  std::uint64_t ordinal{0};
  int epoch{0};   // acting member's epoch counter at the event
  int member{-1};
  EventKind kind{EventKind::step};
  std::optional<AlignmentPolicy> old_policy;
  std::optional<AlignmentPolicy> new_policy;
  std::optional<double> accuracy;
  std::vector<int> sources;  // donor / parent member ids
};

struct LineageEvent {
  std::string kind;  // "init" | "exploit-from" | "crossover-from"
  std::vector<int> sources;
  int epoch{0};
};

struct SearchConfig {
  int population_size{8};
  int total_epochs{30};
  std::uint64_t seed{1234};
  double req2_fraction{0.25};        // bottom slice that exploits
  double req1_upper_fraction{0.375}; // bottom slice boundary for crossover
  double exploit_fraction{0.25};     // top slice that donates
  double resample_prob{0.2};
  std::vector<int> level_values{0, 1, 2, 3};
  std::vector<double> level_probs{0.1, 0.3, 0.3, 0.3};
  double direction_prob{0.5};  // probability of perturbing downward
  int magnitude_m{8};
  int magnitude_delta{4};

  void validate() const;
};

/// Published view of one member, sufficient for ranking decisions.
struct MemberSnapshot {
  int id{0};
  AlignmentPolicy policy;
  std::optional<double> val_acc;
  int epoch{0};
};

/// Member ids ordered by ascending latest accuracy; ties order by ascending
/// id. Throws if any member has never been evaluated.
std::vector<int> rank_members(const std::vector<MemberSnapshot>& members);

/// Rank index r counts from the worst (r = 0).
bool meets_requirement1(int rank_index, int population, const SearchConfig& cfg);
bool meets_requirement2(int rank_index, int population, const SearchConfig& cfg);

struct PopulationMember {
  int id{0};
  AlignmentPolicy policy;
  std::unique_ptr<Trainer> trainer;
  std::optional<double> val_acc;
  int epoch{0};
  int last_change_epoch{0};
  std::vector<LineageEvent> lineage;

  MemberSnapshot snapshot() const { return {id, policy, val_acc, epoch}; }
};

/// Per-parameter record of the branches explore() took; lets callers verify
/// the sampling distribution and log clipping.
struct ExploreTrace {
  bool resampled[2]{false, false};   // [0] = m, [1] = delta
  int level_index[2]{-1, -1};        // index into level_values, -1 on resample
  bool negative[2]{false, false};
  AlignmentPolicy raw;               // perturbed values before clipping
};

/// Per parameter (m first, then delta): with probability resample_prob draw
/// uniformly from that parameter's full grid range; otherwise draw a level
/// from level_probs and a sign, and move by level * magnitude. The combined
/// result is clipped onto the valid grid. Draw order per parameter is fixed:
/// branch; then either one bounded-int draw (resample) or a level draw
/// followed by a sign draw (perturb).
AlignmentPolicy explore(const AlignmentPolicy& p, const SearchSpace& space, const SearchConfig& cfg,
                        Rng& rng, ExploreTrace* trace = nullptr);

/// Outcome of an exploit or crossover transfer, to be installed into the
/// acting member by the engine.
struct TransferOutcome {
  std::unique_ptr<Trainer> state;
  AlignmentPolicy policy;
  std::vector<int> sources;            // exploit: {donor}; crossover: {p1, p2}
  int cloned_from{-1};                 // member whose state was cloned
  std::optional<double> inherited_acc; // that member's last accuracy
  bool explored{false};                // crossover collided and re-explored
  AlignmentPolicy pre_explore_policy;
  ExploreTrace explore_trace;
};

/// Clone policy and state from a donor drawn uniformly among the top
/// exploit_fraction of `ranking`.
TransferOutcome exploit(const std::vector<PopulationMember>& members,
                        const std::vector<int>& ranking, const SearchConfig& cfg, Rng& rng);

/// Intersection-based crossover of the two best members' policies; the child
/// adopts a clone of the geometrically closer parent's state. A child policy
/// already deployed by any member receives one extra explore.
TransferOutcome crossover_step(const std::vector<PopulationMember>& members,
                               const std::vector<int>& ranking, const SearchSpace& space,
                               const SearchConfig& cfg, Rng& rng);

struct TrajectoryPoint {
  int epoch{0};
  int member{0};
  AlignmentPolicy policy;
  double val_acc{0.0};
};

struct MemberSummary {
  int id{0};
  AlignmentPolicy policy;
  double val_acc{0.0};
  std::vector<LineageEvent> lineage;
};

struct SearchResult {
  AlignmentPolicy best_policy;
  double best_accuracy{0.0};
  long long trainer_steps{0};
  long long eval_count{0};
  std::vector<EventRecord> events;
  std::vector<TrajectoryPoint> trajectories;  // one point per eval
  std::vector<MemberSummary> members;         // final population
};

enum class SchedulerMode { sequential, async };

using EventSink = std::function<void(const EventRecord&)>;

/// Population search over the policy grid. All members start at the maximal
/// policy {m_max, 0}. Sequential mode is deterministic: same seed, same byte
/// stream of events. Async mode runs one worker per member against a shared
/// snapshot registry and makes the same decisions against whatever snapshot
/// is visible; its event order is nondeterministic.
/// Events stream into `sink` (if set) as they happen, so a failing trainer
/// leaves a complete log prefix behind the thrown exception.
SearchResult run_search(const SearchConfig& cfg, const SearchSpace& space,
                        const TrainerFactory& factory,
                        SchedulerMode mode = SchedulerMode::sequential,
                        const EventSink& sink = {});

}  // namespace faps
