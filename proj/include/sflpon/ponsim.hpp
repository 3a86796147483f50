#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sflpon/core.hpp"
#include "sflpon/rng.hpp"

// Timing model of one round over the PON. The FL task owns a fixed-rate
// upstream slice that behaves as a single serial server: transmissions are
// granted in order of readiness and never overlap.

namespace sflpon {

enum class OnuWaitPolicy { All, Cutoff };

inline const char* to_string(OnuWaitPolicy p) { return p == OnuWaitPolicy::All ? "all" : "cutoff"; }

struct NetworkConfig {
  double slice_rate_bps = 100e6;
  double model_bits = 26.416e6;
  double t_download_s = 2.0;
  double t_train_min_s = 3.0;
  double t_train_max_s = 20.0;
  double t_wireless_min_s = 1.0;
  double t_wireless_max_s = 5.0;
  double sync_threshold_s = 25.0;  // may be +inf
  double t_agg_s = 0.1;
  double propagation_velocity_m_per_s = 2e8;
  OnuWaitPolicy onu_wait_policy = OnuWaitPolicy::Cutoff;
  double local_cutoff_s = 20.0;

  double transmit_time_s() const noexcept { return model_bits / slice_rate_bps; }

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
    auto positive = [&](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) fail(std::string("network.") + name + " must be finite and > 0");
    };
    auto non_negative = [&](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail(std::string("network.") + name + " must be finite and >= 0");
    };
    positive(slice_rate_bps, "slice_rate_bps");
    positive(model_bits, "model_bits");
    positive(propagation_velocity_m_per_s, "propagation_velocity_m_per_s");
    non_negative(t_download_s, "t_download_s");
    non_negative(t_train_min_s, "t_train_range_s");
    non_negative(t_wireless_min_s, "t_wireless_range_s");
    non_negative(t_agg_s, "t_agg_s");
    non_negative(local_cutoff_s, "local_cutoff_s");
    if (!(t_train_max_s >= t_train_min_s) || !std::isfinite(t_train_max_s)) {
      fail("network.t_train_range_s must be ordered [min, max]");
    }
    if (!(t_wireless_max_s >= t_wireless_min_s) || !std::isfinite(t_wireless_max_s)) {
      fail("network.t_wireless_range_s must be ordered [min, max]");
    }
    if (!(sync_threshold_s > 0.0)) fail("network.sync_threshold_s must be > 0");
  }
};

struct SelectedClient {
  ClientId id;
  std::int64_t sample_count = 1;
};

struct ClientLatency {
  ClientId id;
  double t_train = 0.0;
  double t_wireless = 0.0;
};

struct SliceGrant {
  double start_s = 0.0;
  double end_s = 0.0;
  int onu = 0;
};

struct ClientOutcome {
  ClientId id;
  TimingSample timing;
  double ready_s = 0.0;       // update available at the ONU
  double completion_s = 0.0;  // +inf when an ONU discarded the update
  bool delivered = true;
};

struct OnuOutcome {
  int onu = 0;
  int selected = 0;
  int retained = 0;
  double ready_s = 0.0;
  double completion_s = 0.0;
};

struct UploadOutcome {
  std::vector<ClientOutcome> clients;  // sorted by id
  std::vector<ClientId> involved;      // sorted
  double upstream_bits = 0.0;
  std::vector<OnuOutcome> onus;        // SFL only, ascending ONU index
  std::vector<SliceGrant> grants;      // in grant order
};

/// Single fixed-rate server. Each transmission starts when both the sender
/// is ready and the previous transmission has finished.
class SerialSlice {
 public:
  explicit SerialSlice(double rate_bps) : rate_bps_(rate_bps) {}

  const SliceGrant& transmit(double ready_s, double bits, int onu) {
    const double start = std::max(ready_s, free_at_);
    free_at_ = start + bits / rate_bps_;
    grants_.push_back(SliceGrant{start, free_at_, onu});
    return grants_.back();
  }

  std::vector<SliceGrant> take_grants() { return std::move(grants_); }

 private:
  double rate_bps_;
  double free_at_ = 0.0;
  std::vector<SliceGrant> grants_;
};

inline double propagation_delay(const Topology& topology, const NetworkConfig& cfg) {
  return topology.distance_km * 1000.0 / cfg.propagation_velocity_m_per_s;
}

/// Affine map of a client's sample count onto the training-time range;
/// degenerate size ranges map to the midpoint.
inline double training_time(std::int64_t k, std::int64_t k_min, std::int64_t k_max, const NetworkConfig& cfg) {
  if (k_max == k_min) return 0.5 * (cfg.t_train_min_s + cfg.t_train_max_s);
  const double frac = static_cast<double>(k - k_min) / static_cast<double>(k_max - k_min);
  return cfg.t_train_min_s + (cfg.t_train_max_s - cfg.t_train_min_s) * frac;
}

/// Training time from k_ij and an independent uniform wireless delay per
/// client. Draws happen in client-id order so the result does not depend on
/// the order of `selected`.
inline std::vector<ClientLatency> sample_latencies(std::span<const SelectedClient> selected, std::int64_t k_min,
                                                   std::int64_t k_max, const NetworkConfig& cfg, Rng& rng) {
  if (k_min > k_max) throw Error(ErrorCode::InvalidConfig, "sample_latencies requires k_min <= k_max");
  std::vector<SelectedClient> sorted(selected.begin(), selected.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::uniform_real_distribution<double> wireless(cfg.t_wireless_min_s, cfg.t_wireless_max_s);
  std::vector<ClientLatency> out;
  out.reserve(sorted.size());
  for (const auto& c : sorted) {
    out.push_back(ClientLatency{c.id, training_time(c.sample_count, k_min, k_max, cfg), wireless(rng)});
  }
  return out;
}

/// Clients whose completion does not exceed the threshold (inclusive).
/// Works on any range of records exposing `id` and `completion_s`.
template <typename Range>
std::vector<ClientId> filter_stragglers(const Range& completions, double threshold_s) {
  std::vector<ClientId> involved;
  for (const auto& c : completions) {
    if (c.completion_s <= threshold_s) involved.push_back(c.id);
  }
  std::sort(involved.begin(), involved.end());
  return involved;
}

/// Benchmark upload: every selected client sends its own update over the
/// slice, FIFO by readiness with ties broken by client id. Stragglers still
/// transmit; they are only left out of aggregation.
inline UploadOutcome simulate_upstream_classical(std::span<const ClientLatency> latencies, const NetworkConfig& cfg,
                                                 const Topology& topology) {
  if (latencies.empty()) throw Error(ErrorCode::EmptySelection, "no clients selected");
  const double prop = propagation_delay(topology, cfg);

  UploadOutcome out;
  out.clients.reserve(latencies.size());
  for (const auto& l : latencies) {
    ClientOutcome c;
    c.id = l.id;
    c.timing.t_download = cfg.t_download_s;
    c.timing.t_train = l.t_train;
    c.timing.t_wireless = l.t_wireless;
    c.ready_s = cfg.t_download_s + l.t_train + l.t_wireless;
    out.clients.push_back(c);
  }
  std::sort(out.clients.begin(), out.clients.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::vector<ClientOutcome*> queue;
  for (auto& c : out.clients) queue.push_back(&c);
  std::stable_sort(queue.begin(), queue.end(),
                   [](const ClientOutcome* a, const ClientOutcome* b) { return a->ready_s < b->ready_s; });

  SerialSlice slice(cfg.slice_rate_bps);
  for (ClientOutcome* c : queue) {
    const auto& g = slice.transmit(c->ready_s, cfg.model_bits, c->id.onu);
    c->completion_s = g.end_s + prop;
    c->timing.t_pon = c->completion_s - c->ready_s;
  }
  out.grants = slice.take_grants();
  out.involved = filter_stragglers(out.clients, cfg.sync_threshold_s);
  out.upstream_bits = static_cast<double>(latencies.size()) * cfg.model_bits;
  return out;
}

/// Two-step upload: each ONU folds its retained clients into one aggregate
/// and sends a single model-sized message. Under the cutoff policy an ONU
/// discards updates arriving after local_cutoff_s, but always keeps its
/// earliest arrival so every ONU with selected clients transmits. With an
/// infinite sync threshold there is nothing to cut for, and ONUs wait for all.
inline UploadOutcome simulate_upstream_sfl(std::span<const ClientLatency> latencies, const NetworkConfig& cfg,
                                           const Topology& topology) {
  if (latencies.empty()) throw Error(ErrorCode::EmptySelection, "no clients selected");
  const double prop = propagation_delay(topology, cfg);
  const bool use_cutoff = cfg.onu_wait_policy == OnuWaitPolicy::Cutoff && std::isfinite(cfg.sync_threshold_s);
  const double cutoff = use_cutoff ? cfg.local_cutoff_s : std::numeric_limits<double>::infinity();

  UploadOutcome out;
  for (const auto& l : latencies) {
    ClientOutcome c;
    c.id = l.id;
    c.timing.t_download = cfg.t_download_s;
    c.timing.t_train = l.t_train;
    c.timing.t_wireless = l.t_wireless;
    c.ready_s = cfg.t_download_s + l.t_train + l.t_wireless;
    out.clients.push_back(c);
  }
  std::sort(out.clients.begin(), out.clients.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::map<int, std::vector<ClientOutcome*>> by_onu;
  for (auto& c : out.clients) by_onu[c.id.onu].push_back(&c);

  for (auto& [onu, members] : by_onu) {
    OnuOutcome o;
    o.onu = onu;
    o.selected = static_cast<int>(members.size());
    const ClientOutcome* earliest = *std::min_element(
        members.begin(), members.end(), [](const ClientOutcome* a, const ClientOutcome* b) {
          return a->ready_s < b->ready_s || (a->ready_s == b->ready_s && a->id < b->id);
        });
    double last_arrival = -std::numeric_limits<double>::infinity();
    for (ClientOutcome* c : members) {
      c->delivered = c->ready_s <= cutoff || c == earliest;
      if (c->delivered) {
        ++o.retained;
        last_arrival = std::max(last_arrival, c->ready_s);
      }
    }
    o.ready_s = last_arrival + cfg.t_agg_s;
    out.onus.push_back(o);
  }

  std::vector<OnuOutcome*> queue;
  for (auto& o : out.onus) queue.push_back(&o);
  std::stable_sort(queue.begin(), queue.end(),
                   [](const OnuOutcome* a, const OnuOutcome* b) { return a->ready_s < b->ready_s; });

  SerialSlice slice(cfg.slice_rate_bps);
  for (OnuOutcome* o : queue) {
    o->completion_s = slice.transmit(o->ready_s, cfg.model_bits, o->onu).end_s + prop;
  }
  out.grants = slice.take_grants();

  for (const auto& o : out.onus) {
    for (ClientOutcome* c : by_onu[o.onu]) {
      if (c->delivered) {
        c->timing.t_agg = o.ready_s - c->ready_s;
        c->timing.t_pon = o.completion_s - o.ready_s;
        c->completion_s = o.completion_s;
      } else {
        c->completion_s = std::numeric_limits<double>::infinity();
      }
    }
  }
  out.involved = filter_stragglers(out.clients, cfg.sync_threshold_s);
  out.upstream_bits = static_cast<double>(out.onus.size()) * cfg.model_bits;
  return out;
}

/// Upstream saving of two-step over one-step aggregation when every ONU
/// hosts at least one selected client.
inline double round_bandwidth_saving(int n_onus, int n_selected, double model_bits) {
  if (n_onus < 1 || n_selected < n_onus || !(model_bits > 0.0)) {
    throw Error(ErrorCode::InvalidCounts, "saving needs n_selected >= n_onus >= 1 and model_bits > 0");
  }
  const double classical = static_cast<double>(n_selected) * model_bits;
  const double sfl = static_cast<double>(n_onus) * model_bits;
  return 1.0 - sfl / classical;
}

}  // namespace sflpon
