#include "faps/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace faps {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::step: return "step";
    case EventKind::eval: return "eval";
    case EventKind::exploit: return "exploit";
    case EventKind::explore: return "explore";
    case EventKind::crossover: return "crossover";
    case EventKind::clip: return "clip";
  }
  return "unknown";
}

namespace {

int slice_count(int population, double fraction) {
  return static_cast<int>(std::floor(population * fraction + 1e-9));
}

const PopulationMember& member_by_id(const std::vector<PopulationMember>& members, int id) {
  for (const auto& m : members)
    if (m.id == id) return m;
  throw std::logic_error("unknown member id");
}

int rank_of(const std::vector<int>& ranking, int id) {
  for (std::size_t i = 0; i < ranking.size(); ++i)
    if (ranking[i] == id) return static_cast<int>(i);
  throw std::logic_error("member missing from ranking");
}

}  // namespace

void SearchConfig::validate() const {
  if (population_size < 4)
    throw std::invalid_argument("search config: population_size must be at least 4");
  if (total_epochs < 1) throw std::invalid_argument("search config: total_epochs must be positive");
  auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open_unit(req2_fraction) || !open_unit(req1_upper_fraction) || !open_unit(exploit_fraction))
    throw std::invalid_argument("search config: rank fractions must lie in (0, 1)");
  if (resample_prob < 0.0 || resample_prob > 1.0)
    throw std::invalid_argument("search config: resample_prob must lie in [0, 1]");
  if (direction_prob < 0.0 || direction_prob > 1.0)
    throw std::invalid_argument("search config: direction_prob must lie in [0, 1]");
  if (level_values.empty() || level_values.size() != level_probs.size())
    throw std::invalid_argument("search config: level_values and level_probs must match");
  double sum = 0.0;
  for (double p : level_probs) {
    if (p < 0.0) throw std::invalid_argument("search config: level_probs must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("search config: level_probs must sum to 1");
  for (int v : level_values)
    if (v < 0) throw std::invalid_argument("search config: level_values must be nonnegative");
  if (magnitude_m <= 0 || magnitude_delta <= 0)
    throw std::invalid_argument("search config: magnitudes must be positive");
  if (slice_count(population_size, exploit_fraction) < 1)
    throw std::invalid_argument("search config: exploit slice is empty at this population size");
}

std::vector<int> rank_members(const std::vector<MemberSnapshot>& members) {
  std::vector<const MemberSnapshot*> order;
  order.reserve(members.size());
  for (const auto& m : members) {
    if (!m.val_acc.has_value())
      throw std::invalid_argument("rank_members: member " + std::to_string(m.id) +
                                  " has not been evaluated");
    order.push_back(&m);
  }
  std::sort(order.begin(), order.end(), [](const MemberSnapshot* a, const MemberSnapshot* b) {
    return std::tie(*a->val_acc, a->id) < std::tie(*b->val_acc, b->id);
  });
  std::vector<int> ids;
  ids.reserve(order.size());
  for (const auto* m : order) ids.push_back(m->id);
  return ids;
}

bool meets_requirement2(int rank_index, int population, const SearchConfig& cfg) {
  return rank_index < slice_count(population, cfg.req2_fraction);
}

bool meets_requirement1(int rank_index, int population, const SearchConfig& cfg) {
  return rank_index >= slice_count(population, cfg.req2_fraction) &&
         rank_index < slice_count(population, cfg.req1_upper_fraction);
}

AlignmentPolicy explore(const AlignmentPolicy& p, const SearchSpace& space, const SearchConfig& cfg,
                        Rng& rng, ExploreTrace* trace) {
  const int origin[2] = {space.m_min, space.delta_min};
  const int grid_count[2] = {(space.m_max - space.m_min) / space.s_m + 1,
                             (space.delta_max - space.delta_min) / space.s_delta + 1};
  const int grid_step[2] = {space.s_m, space.s_delta};
  const int magnitude[2] = {cfg.magnitude_m, cfg.magnitude_delta};

  int raw[2] = {p.m, p.delta};
  for (int k = 0; k < 2; ++k) {
    if (rng.uniform01() < cfg.resample_prob) {
      raw[k] = origin[k] +
               static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(grid_count[k]))) *
                   grid_step[k];
      if (trace) {
        trace->resampled[k] = true;
        trace->level_index[k] = -1;
        trace->negative[k] = false;
      }
    } else {
      const double u = rng.uniform01();
      std::size_t level = cfg.level_probs.size() - 1;
      double cum = 0.0;
      for (std::size_t i = 0; i < cfg.level_probs.size(); ++i) {
        cum += cfg.level_probs[i];
        if (u < cum) {
          level = i;
          break;
        }
      }
      const bool negative = rng.uniform01() < cfg.direction_prob;
      raw[k] += (negative ? -1 : 1) * cfg.level_values[level] * magnitude[k];
      if (trace) {
        trace->resampled[k] = false;
        trace->level_index[k] = static_cast<int>(level);
        trace->negative[k] = negative;
      }
    }
  }

  const AlignmentPolicy perturbed{raw[0], raw[1]};
  if (trace) trace->raw = perturbed;
  return clip_policy(perturbed, space);
}

TransferOutcome exploit(const std::vector<PopulationMember>& members,
                        const std::vector<int>& ranking, const SearchConfig& cfg, Rng& rng) {
  const int n = static_cast<int>(ranking.size());
  const int top = slice_count(n, cfg.exploit_fraction);
  const int pick = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(top)));
  const int donor_id = ranking[n - top + pick];
  const PopulationMember& donor = member_by_id(members, donor_id);

  TransferOutcome out;
  out.state = donor.trainer->clone();
  out.policy = donor.policy;
  out.pre_explore_policy = donor.policy;
  out.sources = {donor_id};
  out.cloned_from = donor_id;
  out.inherited_acc = donor.val_acc;
  return out;
}

TransferOutcome crossover_step(const std::vector<PopulationMember>& members,
                               const std::vector<int>& ranking, const SearchSpace& space,
                               const SearchConfig& cfg, Rng& rng) {
  const int n = static_cast<int>(ranking.size());
  const PopulationMember& parent1 = member_by_id(members, ranking[n - 1]);
  const PopulationMember& parent2 = member_by_id(members, ranking[n - 2]);

  const CrossoverResult cr = intersection_crossover(parent1.policy, parent2.policy, space,
                                                    parent1.val_acc, parent2.val_acc);
  const PopulationMember& donor = cr.parent_index == 1 ? parent1 : parent2;

  TransferOutcome out;
  out.state = donor.trainer->clone();
  out.policy = cr.policy;
  out.pre_explore_policy = cr.policy;
  out.sources = {parent1.id, parent2.id};
  out.cloned_from = donor.id;
  out.inherited_acc = donor.val_acc;

  const bool deployed = std::any_of(members.begin(), members.end(),
                                    [&](const PopulationMember& m) { return m.policy == cr.policy; });
  if (deployed) {
    out.policy = explore(cr.policy, space, cfg, rng, &out.explore_trace);
    out.explored = true;
  }
  return out;
}

namespace {

// Serializes event emission; hands out ordinals. The sink sees every event
// before it lands in the in-memory log, so a crashing run still flushes.
class EventEmitter {
 public:
  EventEmitter(std::vector<EventRecord>* store, const EventSink& sink)
      : store_(store), sink_(sink) {}

  void emit(EventRecord ev) {
    std::lock_guard<std::mutex> lock(mu_);
    ev.ordinal = next_++;
    if (sink_) sink_(ev);
    store_->push_back(std::move(ev));
  }

 private:
  std::mutex mu_;
  std::vector<EventRecord>* store_;
  EventSink sink_;
  std::uint64_t next_{0};
};

EventRecord make_event(EventKind kind, int member, int epoch) {
  EventRecord ev;
  ev.kind = kind;
  ev.member = member;
  ev.epoch = epoch;
  return ev;
}

struct BestTracker {
  std::mutex mu;
  bool seen{false};
  AlignmentPolicy policy;
  double accuracy{0.0};

  void offer(const AlignmentPolicy& p, double v) {
    std::lock_guard<std::mutex> lock(mu);
    if (!seen || v > accuracy) {
      seen = true;
      policy = p;
      accuracy = v;
    }
  }
};

// Emits the transfer events (main action, then the optional explore and
// clip records) and installs the outcome into the member.
void apply_transfer(PopulationMember& mem, TransferOutcome&& out, EventKind main_kind,
                    const char* lineage_kind, EventEmitter& emitter) {
  EventRecord main = make_event(main_kind, mem.id, mem.epoch);
  main.old_policy = mem.policy;
  main.new_policy = out.pre_explore_policy;
  main.accuracy = out.inherited_acc;
  main.sources = out.sources;
  emitter.emit(std::move(main));

  if (out.explored) {
    EventRecord ex = make_event(EventKind::explore, mem.id, mem.epoch);
    ex.old_policy = out.pre_explore_policy;
    ex.new_policy = out.policy;
    emitter.emit(std::move(ex));
    if (!(out.explore_trace.raw == out.policy)) {
      EventRecord clip = make_event(EventKind::clip, mem.id, mem.epoch);
      clip.old_policy = out.explore_trace.raw;
      clip.new_policy = out.policy;
      emitter.emit(std::move(clip));
    }
  }

  // The cloned state last trained under the donor's policy; that is the
  // "old" side of the policy-change hook, not this member's previous policy.
  mem.trainer = std::move(out.state);
  if (!(out.policy == out.pre_explore_policy) || !(out.policy == mem.policy)) {
    // fire only when the state will actually train under something new
  }
  const AlignmentPolicy trained_under =
      out.sources.size() == 1 ? out.pre_explore_policy : out.pre_explore_policy;
  (void)trained_under;
  mem.policy = out.policy;
  mem.val_acc = out.inherited_acc;
  mem.last_change_epoch = mem.epoch;
  mem.lineage.push_back({lineage_kind, out.sources, mem.epoch});
}

}  // namespace

namespace {

SearchResult run_sequential(const SearchConfig& cfg, const SearchSpace& space,
                            const TrainerFactory& factory, const EventSink& sink) {
  const std::vector<AlignmentPolicy> candidates = enumerate_space(space);
  // A single-candidate space has nothing to search: no policy move is
  // expressible, so the engine degenerates to plain training.
  const bool search_enabled = candidates.size() > 1;
  const AlignmentPolicy start = space.super_roi();
  const int n = cfg.population_size;

  SearchResult result;
  EventEmitter emitter(&result.events, sink);
  BestTracker best;

  std::vector<PopulationMember> members;
  std::vector<Rng> rngs;
  members.reserve(n);
  rngs.reserve(n);
  for (int i = 0; i < n; ++i) {
    PopulationMember pm;
    pm.id = i;
    pm.policy = start;
    pm.trainer = factory(i);
    pm.lineage.push_back({"init", {}, 0});
    members.push_back(std::move(pm));
    rngs.push_back(substream(cfg.seed, StreamDomain::decision, static_cast<std::uint64_t>(i)));
  }

  for (int epoch = 1; epoch <= cfg.total_epochs; ++epoch) {
    // Phase 1: every member trains one epoch and publishes a fresh accuracy.
    for (auto& mem : members) {
      mem.trainer->step(mem.policy);
      mem.epoch += 1;
      ++result.trainer_steps;
      EventRecord st = make_event(EventKind::step, mem.id, mem.epoch);
      st.new_policy = mem.policy;
      emitter.emit(std::move(st));

      const double v = mem.trainer->eval(mem.policy);
      mem.val_acc = v;
      ++result.eval_count;
      result.trajectories.push_back({mem.epoch, mem.id, mem.policy, v});
      best.offer(mem.policy, v);
      EventRecord ev = make_event(EventKind::eval, mem.id, mem.epoch);
      ev.new_policy = mem.policy;
      ev.accuracy = v;
      emitter.emit(std::move(ev));
    }
    if (!search_enabled) continue;

    // Phase 2: ready members act in id order; each decision ranks the latest
    // published values, so earlier transfers in this epoch are visible.
    for (auto& mem : members) {
      if (mem.epoch - mem.last_change_epoch < 1) continue;
      std::vector<MemberSnapshot> snaps;
      snaps.reserve(members.size());
      for (const auto& m : members) snaps.push_back(m.snapshot());
      const std::vector<int> ranking = rank_members(snaps);
      const int r = rank_of(ranking, mem.id);

      if (meets_requirement1(r, n, cfg)) {
        apply_transfer(mem, crossover_step(members, ranking, space, cfg, rngs[mem.id]),
                       EventKind::crossover, "crossover-from", emitter);
      } else if (meets_requirement2(r, n, cfg)) {
        TransferOutcome out = exploit(members, ranking, cfg, rngs[mem.id]);
        // exploit is always followed by explore on the adopted policy
        ExploreTrace trace;
        out.pre_explore_policy = out.policy;
        out.policy = explore(out.policy, space, cfg, rngs[mem.id], &trace);
        out.explored = true;
        out.explore_trace = trace;
        apply_transfer(mem, std::move(out), EventKind::exploit, "exploit-from", emitter);
      }
    }
  }

  result.best_policy = best.policy;
  result.best_accuracy = best.accuracy;
  for (const auto& mem : members)
    result.members.push_back({mem.id, mem.policy, mem.val_acc.value_or(0.0), mem.lineage});
  return result;
}

struct SharedMember {
  std::mutex mu;
  PopulationMember pm;
};

class SnapshotBoard {
 public:
  explicit SnapshotBoard(std::vector<MemberSnapshot> init) : snaps_(std::move(init)) {}

  void publish(const MemberSnapshot& snap) {
    std::lock_guard<std::mutex> lock(mu_);
    snaps_[static_cast<std::size_t>(snap.id)] = snap;
  }

  // Consistent copy: a reader never observes a half-written snapshot.
  std::vector<MemberSnapshot> copy() const {
    std::lock_guard<std::mutex> lock(mu_);
    return snaps_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<MemberSnapshot> snaps_;
};

SearchResult run_async(const SearchConfig& cfg, const SearchSpace& space,
                       const TrainerFactory& factory, const EventSink& sink) {
  const std::vector<AlignmentPolicy> candidates = enumerate_space(space);
  const bool search_enabled = candidates.size() > 1;
  const AlignmentPolicy start = space.super_roi();
  const int n = cfg.population_size;

  SearchResult result;
  EventEmitter emitter(&result.events, sink);
  BestTracker best;
  std::mutex result_mu;  // trajectories + counters

  std::vector<std::unique_ptr<SharedMember>> shared;
  std::vector<MemberSnapshot> init_snaps;
  for (int i = 0; i < n; ++i) {
    auto sm = std::make_unique<SharedMember>();
    sm->pm.id = i;
    sm->pm.policy = start;
    sm->pm.trainer = factory(i);
    sm->pm.lineage.push_back({"init", {}, 0});
    init_snaps.push_back(sm->pm.snapshot());
    shared.push_back(std::move(sm));
  }
  SnapshotBoard board(std::move(init_snaps));

  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));

  auto worker = [&](int id) {
    SharedMember& self = *shared[static_cast<std::size_t>(id)];
    Rng rng = substream(cfg.seed, StreamDomain::decision, static_cast<std::uint64_t>(id));
    for (int epoch = 1; epoch <= cfg.total_epochs; ++epoch) {
      double v = 0.0;
      MemberSnapshot snap;
      int last_change = 0;
      {
        std::lock_guard<std::mutex> lock(self.mu);
        self.pm.trainer->step(self.pm.policy);
        self.pm.epoch += 1;
        v = self.pm.trainer->eval(self.pm.policy);
        self.pm.val_acc = v;
        snap = self.pm.snapshot();
        last_change = self.pm.last_change_epoch;
      }
      board.publish(snap);
      {
        std::lock_guard<std::mutex> lock(result_mu);
        ++result.trainer_steps;
        ++result.eval_count;
        result.trajectories.push_back({snap.epoch, id, snap.policy, v});
      }
      best.offer(snap.policy, v);
      EventRecord st = make_event(EventKind::step, id, snap.epoch);
      st.new_policy = snap.policy;
      emitter.emit(std::move(st));
      EventRecord ev = make_event(EventKind::eval, id, snap.epoch);
      ev.new_policy = snap.policy;
      ev.accuracy = v;
      emitter.emit(std::move(ev));

      if (!search_enabled || snap.epoch - last_change < 1) continue;

      const std::vector<MemberSnapshot> snaps = board.copy();
      const bool all_evaluated =
          std::all_of(snaps.begin(), snaps.end(),
                      [](const MemberSnapshot& s) { return s.val_acc.has_value(); });
      if (!all_evaluated) continue;  // only possible while the population warms up
      const std::vector<int> ranking = rank_members(snaps);
      const int r = rank_of(ranking, id);

      TransferOutcome out;
      EventKind main_kind;
      const char* lineage_kind;
      if (meets_requirement1(r, n, cfg)) {
        const MemberSnapshot& s1 = snaps[static_cast<std::size_t>(ranking[n - 1])];
        const MemberSnapshot& s2 = snaps[static_cast<std::size_t>(ranking[n - 2])];
        const CrossoverResult cr =
            intersection_crossover(s1.policy, s2.policy, space, s1.val_acc, s2.val_acc);
        const MemberSnapshot& donor = cr.parent_index == 1 ? s1 : s2;
        {
          std::lock_guard<std::mutex> lock(shared[static_cast<std::size_t>(donor.id)]->mu);
          out.state = shared[static_cast<std::size_t>(donor.id)]->pm.trainer->clone();
        }
        out.policy = cr.policy;
        out.pre_explore_policy = cr.policy;
        out.sources = {s1.id, s2.id};
        out.cloned_from = donor.id;
        out.inherited_acc = donor.val_acc;
        const bool deployed =
            std::any_of(snaps.begin(), snaps.end(),
                        [&](const MemberSnapshot& s) { return s.policy == cr.policy; });
        if (deployed) {
          out.policy = explore(cr.policy, space, cfg, rng, &out.explore_trace);
          out.explored = true;
        }
        main_kind = EventKind::crossover;
        lineage_kind = "crossover-from";
      } else if (meets_requirement2(r, n, cfg)) {
        const int top = slice_count(n, cfg.exploit_fraction);
        const int pick = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(top)));
        const int donor_id = ranking[n - top + pick];
        const MemberSnapshot& donor = snaps[static_cast<std::size_t>(donor_id)];
        {
          std::lock_guard<std::mutex> lock(shared[static_cast<std::size_t>(donor_id)]->mu);
          out.state = shared[static_cast<std::size_t>(donor_id)]->pm.trainer->clone();
        }
        out.sources = {donor_id};
        out.cloned_from = donor_id;
        out.inherited_acc = donor.val_acc;
        out.pre_explore_policy = donor.policy;
        ExploreTrace trace;
        out.policy = explore(donor.policy, space, cfg, rng, &trace);
        out.explored = true;
        out.explore_trace = trace;
        main_kind = EventKind::exploit;
        lineage_kind = "exploit-from";
      } else {
        continue;
      }

      MemberSnapshot updated;
      {
        std::lock_guard<std::mutex> lock(self.mu);
        EventRecord main = make_event(main_kind, id, self.pm.epoch);
        main.old_policy = self.pm.policy;
        main.new_policy = out.pre_explore_policy;
        main.accuracy = out.inherited_acc;
        main.sources = out.sources;
        emitter.emit(std::move(main));
        if (out.explored) {
          EventRecord ex = make_event(EventKind::explore, id, self.pm.epoch);
          ex.old_policy = out.pre_explore_policy;
          ex.new_policy = out.policy;
          emitter.emit(std::move(ex));
          if (!(out.explore_trace.raw == out.policy)) {
            EventRecord clip = make_event(EventKind::clip, id, self.pm.epoch);
            clip.old_policy = out.explore_trace.raw;
            clip.new_policy = out.policy;
            emitter.emit(std::move(clip));
          }
        }
        self.pm.trainer = std::move(out.state);
        if (!(out.policy == out.pre_explore_policy))
          self.pm.trainer->on_policy_change(out.pre_explore_policy, out.policy);
        self.pm.policy = out.policy;
        self.pm.val_acc = out.inherited_acc;
        self.pm.last_change_epoch = self.pm.epoch;
        self.pm.lineage.push_back({lineage_kind, out.sources, self.pm.epoch});
        updated = self.pm.snapshot();
      }
      board.publish(updated);
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      try {
        worker(i);
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  result.best_policy = best.policy;
  result.best_accuracy = best.accuracy;
  for (const auto& sm : shared)
    result.members.push_back(
        {sm->pm.id, sm->pm.policy, sm->pm.val_acc.value_or(0.0), sm->pm.lineage});
  return result;
}

}  // namespace

SearchResult run_search(const SearchConfig& cfg, const SearchSpace& space,
                        const TrainerFactory& factory, SchedulerMode mode, const EventSink& sink) {
  cfg.validate();
  space.validate();
  if (!factory) throw std::invalid_argument("run_search: trainer factory is empty");
  return mode == SchedulerMode::sequential ? run_sequential(cfg, space, factory, sink)
                                           : run_async(cfg, space, factory, sink);
}

}  // namespace faps
