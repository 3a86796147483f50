#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sflpon/aggregation.hpp"
#include "sflpon/core.hpp"
#include "sflpon/ponsim.hpp"
#include "sflpon/rng.hpp"
#include "sflpon/training.hpp"

namespace sflpon {

enum class Mode { Classical, Sfl };

inline const char* to_string(Mode m) { return m == Mode::Classical ? "classical" : "sfl"; }

// Uniform draws N of all n*m clients; OnuBalanced spreads N as evenly as
// possible over the ONUs (so every ONU is active once N >= n) and draws
// uniformly within each ONU.
enum class SelectionPolicy { Uniform, OnuBalanced };

inline const char* to_string(SelectionPolicy p) { return p == SelectionPolicy::Uniform ? "uniform" : "onu_balanced"; }

struct ExperimentConfig {
  Topology topology;
  NetworkConfig network;
  PartitionConfig partition;
  HyperParams hyper;
  Mode mode = Mode::Sfl;
  SelectionPolicy selection = SelectionPolicy::Uniform;
  int n_selected = 48;
  int n_rounds = 50;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const {
    topology.validate();
    network.validate();
    hyper.validate();
    partition.validate();
    if (partition.n_clients != topology.population()) {
      throw Error(ErrorCode::InvalidConfig, "partition.n_clients must equal n_onus * clients_per_onu");
    }
    if (n_selected < 1) throw Error(ErrorCode::InvalidConfig, "n_selected must be >= 1");
    if (n_selected > topology.population()) {
      throw Error(ErrorCode::TooManyRequested, "n_selected " + std::to_string(n_selected) + " exceeds population " +
                                                   std::to_string(topology.population()));
    }
    if (n_rounds < 1) throw Error(ErrorCode::InvalidConfig, "n_rounds must be >= 1");
    if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
  }
};

struct RoundRecord {
  int round = 0;
  Mode mode = Mode::Sfl;
  int n_selected = 0;
  int n_involved = 0;
  double upstream_bits = 0.0;
  double saving_fraction = 0.0;  // vs. every selected client uploading
  double accuracy = 0.0;
  double t_total_min_s = 0.0;    // over clients whose update reached the CPS
  double t_total_mean_s = 0.0;
  double t_total_max_s = 0.0;
  double round_duration_s = 0.0;
  std::int64_t k_total = 0;

  bool operator==(const RoundRecord&) const = default;
};

/// Sorted client ids. Throws TooManyRequested when N exceeds n*m.
inline std::vector<ClientId> select_clients(Rng& rng, int n_selected, const Topology& topology,
                                            SelectionPolicy policy = SelectionPolicy::Uniform) {
  const int population = topology.population();
  if (n_selected < 1) throw Error(ErrorCode::InvalidCounts, "at least one client must be selected");
  if (n_selected > population) {
    throw Error(ErrorCode::TooManyRequested, "cannot select " + std::to_string(n_selected) + " of " +
                                                 std::to_string(population) + " clients");
  }

  // Partial Fisher-Yates over [0, size): the first `count` entries are a
  // uniform sample without replacement.
  auto draw = [&rng](int size, int count) {
    std::vector<int> pool(static_cast<std::size_t>(size));
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < count; ++i) {
      std::uniform_int_distribution<int> pick(i, size - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    pool.resize(static_cast<std::size_t>(count));
    return pool;
  };

  std::vector<ClientId> out;
  out.reserve(static_cast<std::size_t>(n_selected));
  if (policy == SelectionPolicy::Uniform) {
    for (int idx : draw(population, n_selected)) out.push_back(topology.from_flat(static_cast<std::size_t>(idx)));
  } else {
    const int base = n_selected / topology.n_onus;
    const int extra = n_selected % topology.n_onus;
    std::vector<int> quota(static_cast<std::size_t>(topology.n_onus), base);
    for (int onu : draw(topology.n_onus, extra)) ++quota[static_cast<std::size_t>(onu)];
    for (int onu = 0; onu < topology.n_onus; ++onu) {
      for (int j : draw(topology.clients_per_onu, quota[static_cast<std::size_t>(onu)])) {
        out.push_back(ClientId{onu + 1, j + 1});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ExperimentState {
  ExperimentConfig cfg;
  Partition data;
  GlobalModel global;
  double accuracy = 0.0;
  // Inspection hooks for the last completed round.
  std::vector<ClientUpdate> last_involved_updates;
  UploadOutcome last_outcome;
};

inline ExperimentState init_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  PartitionConfig pc = cfg.partition;
  pc.seed = derive_seed(cfg.seed, 0, StreamPurpose::Partition);
  Partition data = synth_partition(pc);
  const SoftmaxLayout layout = data.test.layout();
  GlobalModel global{ModelParams::zeros(layout.dim()), 0, 0};
  const double acc = evaluate(global, data.test);
  return ExperimentState{cfg, std::move(data), std::move(global), acc, {}, {}};
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&fn, t, n_threads, count] {
      for (std::size_t i = t; i < count; i += n_threads) fn(i);
    });
  }
}

}  // namespace detail

/// One full round: select, simulate the upload for the configured mode,
/// train the clients whose updates will be aggregated, aggregate, evaluate.
/// Upload timing depends only on sample counts and latency draws, so
/// training is skipped for clients that cannot contribute.
inline RoundRecord run_round(ExperimentState& state) {
  const ExperimentConfig& cfg = state.cfg;
  const Topology& topo = cfg.topology;
  const auto round_index = static_cast<std::uint64_t>(state.global.round);

  Rng selection_rng = make_stream(cfg.seed, round_index, StreamPurpose::Selection);
  const auto ids = select_clients(selection_rng, cfg.n_selected, topo, cfg.selection);

  std::vector<SelectedClient> selected;
  selected.reserve(ids.size());
  for (const auto& id : ids) {
    selected.push_back(SelectedClient{
        id, static_cast<std::int64_t>(state.data.clients[topo.flat_index(id)].sample_count())});
  }

  Rng wireless_rng = make_stream(cfg.seed, round_index, StreamPurpose::Wireless);
  const auto latencies = sample_latencies(selected, cfg.partition.k_min, cfg.partition.k_max, cfg.network, wireless_rng);

  UploadOutcome outcome = cfg.mode == Mode::Classical ? simulate_upstream_classical(latencies, cfg.network, topo)
                                                      : simulate_upstream_sfl(latencies, cfg.network, topo);

  std::vector<std::optional<ClientUpdate>> trained(outcome.involved.size());
  detail::parallel_for(outcome.involved.size(), cfg.workers, [&](std::size_t i) {
    const ClientId id = outcome.involved[i];
    const auto flat = topo.flat_index(id);
    Rng batch_rng = make_stream(cfg.seed, round_index, StreamPurpose::Batching, flat);
    trained[i] = local_train(id, state.global, state.data.clients[flat], cfg.hyper, batch_rng);
  });
  std::vector<ClientUpdate> updates;
  updates.reserve(trained.size());
  for (auto& u : trained) updates.push_back(std::move(*u));

  if (updates.empty()) {
    state.global.round += 1;
    state.global.k_total = 0;
  } else if (cfg.mode == Mode::Classical) {
    state.global = cps_aggregate_one_step(updates, state.global.round);
  } else {
    const auto aggs = aggregate_per_onu(updates);
    state.global = cps_aggregate_two_step(aggs, state.global.round);
  }
  state.accuracy = evaluate(state.global, state.data.test);

  RoundRecord rec;
  rec.round = state.global.round;
  rec.mode = cfg.mode;
  rec.n_selected = static_cast<int>(ids.size());
  rec.n_involved = static_cast<int>(updates.size());
  rec.upstream_bits = outcome.upstream_bits;
  rec.saving_fraction = 1.0 - outcome.upstream_bits / (static_cast<double>(ids.size()) * cfg.network.model_bits);
  rec.accuracy = state.accuracy;
  rec.k_total = state.global.k_total;

  double t_min = std::numeric_limits<double>::infinity();
  double t_max = 0.0;
  double t_sum = 0.0;
  std::size_t delivered = 0;
  for (const auto& c : outcome.clients) {
    if (!c.delivered) continue;
    const double t = c.timing.total();
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
    t_sum += t;
    ++delivered;
  }
  if (delivered > 0) {
    rec.t_total_min_s = t_min;
    rec.t_total_mean_s = t_sum / static_cast<double>(delivered);
    rec.t_total_max_s = t_max;
  }
  rec.round_duration_s = std::min(cfg.network.sync_threshold_s, t_max);

  state.last_involved_updates = std::move(updates);
  state.last_outcome = std::move(outcome);
  return rec;
}

inline std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg) {
  ExperimentState state = init_experiment(cfg);
  std::vector<RoundRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.n_rounds));
  for (int r = 0; r < cfg.n_rounds; ++r) records.push_back(run_round(state));
  return records;
}

struct ComparisonSummary {
  double mean_saving = 0.0;
  double mean_involved_gap = 0.0;   // sfl minus classical
  double final_accuracy_gap = 0.0;  // sfl minus classical
};

struct Comparison {
  std::vector<RoundRecord> classical;
  std::vector<RoundRecord> sfl;
  std::vector<double> saving_per_round;  // 1 - sfl_bits / classical_bits
  ComparisonSummary summary;
};

/// Runs both modes from the same seed, so partitions, selections and
/// latency draws coincide round by round.
inline Comparison compare_modes(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.mode = Mode::Classical;
  Comparison out;
  out.classical = run_experiment(c);
  c.mode = Mode::Sfl;
  out.sfl = run_experiment(c);

  const std::size_t n = out.classical.size();
  double saving = 0.0;
  double gap = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double s = 1.0 - out.sfl[r].upstream_bits / out.classical[r].upstream_bits;
    out.saving_per_round.push_back(s);
    saving += s;
    gap += out.sfl[r].n_involved - out.classical[r].n_involved;
  }
  out.summary.mean_saving = saving / static_cast<double>(n);
  out.summary.mean_involved_gap = gap / static_cast<double>(n);
  out.summary.final_accuracy_gap = out.sfl.back().accuracy - out.classical.back().accuracy;
  return out;
}

}  // namespace sflpon
