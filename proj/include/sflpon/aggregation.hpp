#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "sflpon/core.hpp"

// One-step FedAvg at the CPS and the two-step variant (weighted sums at the
// ONUs, division by K at the CPS). Inputs are sorted canonically by client id
// (or ONU index) before accumulation, so results are bit-reproducible
// regardless of the order callers pass them in.

namespace sflpon {

namespace detail {

inline std::vector<const ClientUpdate*> canonical_order(std::span<const ClientUpdate> updates) {
  std::vector<const ClientUpdate*> order;
  order.reserve(updates.size());
  for (const auto& u : updates) order.push_back(&u);
  std::stable_sort(order.begin(), order.end(),
                   [](const ClientUpdate* a, const ClientUpdate* b) { return a->id() < b->id(); });
  return order;
}

inline void require_same_dim(std::size_t dim, std::size_t expected, const char* what) {
  if (dim != expected) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has dim " + std::to_string(dim) +
                                                  ", expected " + std::to_string(expected));
  }
}

}  // namespace detail

/// theta_i = sum_j k_ij * w_ij over the updates an ONU actually received.
inline OnuAggregate onu_aggregate(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw Error(ErrorCode::EmptyInput, "onu_aggregate needs at least one update");

  const auto order = detail::canonical_order(updates);
  const int onu = order.front()->id().onu;
  const std::size_t dim = order.front()->params().dim();

  std::vector<double> theta(dim, 0.0);
  std::int64_t k_total = 0;
  for (const ClientUpdate* u : order) {
    if (u->id().onu != onu) {
      throw Error(ErrorCode::MixedOnu, "update from " + to_string(u->id()) + " does not belong to ONU " +
                                           std::to_string(onu));
    }
    detail::require_same_dim(u->params().dim(), dim, "client update");
    const auto k = static_cast<double>(u->sample_count());
    const auto w = u->params().weights();
    for (std::size_t d = 0; d < dim; ++d) theta[d] += k * w[d];
    k_total += u->sample_count();
  }
  return OnuAggregate(onu, ModelParams(std::move(theta)), k_total, static_cast<int>(order.size()));
}

/// w_g = (sum_i theta_i) / K with K = sum_i K_i. Returns round + 1.
inline GlobalModel cps_aggregate_two_step(std::span<const OnuAggregate> aggs, int round) {
  if (aggs.empty()) throw Error(ErrorCode::EmptyInput, "cps_aggregate_two_step needs at least one ONU aggregate");

  std::vector<const OnuAggregate*> order;
  order.reserve(aggs.size());
  for (const auto& a : aggs) order.push_back(&a);
  std::stable_sort(order.begin(), order.end(),
                   [](const OnuAggregate* a, const OnuAggregate* b) { return a->onu_index() < b->onu_index(); });

  const std::size_t dim = order.front()->theta().dim();
  std::vector<double> sum(dim, 0.0);
  std::int64_t k_total = 0;
  for (const OnuAggregate* a : order) {
    detail::require_same_dim(a->theta().dim(), dim, "ONU aggregate");
    const auto theta = a->theta().weights();
    for (std::size_t d = 0; d < dim; ++d) sum[d] += theta[d];
    k_total += a->k_total();
  }
  const auto k = static_cast<double>(k_total);
  for (double& v : sum) v /= k;
  return GlobalModel{ModelParams(std::move(sum)), round + 1, k_total};
}

/// Classical FedAvg: w_g = sum_ij (k_ij / K) * w_ij.
inline GlobalModel cps_aggregate_one_step(std::span<const ClientUpdate> updates, int round) {
  if (updates.empty()) throw Error(ErrorCode::EmptyInput, "cps_aggregate_one_step needs at least one update");

  const auto order = detail::canonical_order(updates);
  const std::size_t dim = order.front()->params().dim();

  std::int64_t k_total = 0;
  for (const ClientUpdate* u : order) {
    detail::require_same_dim(u->params().dim(), dim, "client update");
    k_total += u->sample_count();
  }
  const auto k = static_cast<double>(k_total);

  std::vector<double> out(dim, 0.0);
  for (const ClientUpdate* u : order) {
    const double share = static_cast<double>(u->sample_count()) / k;
    const auto w = u->params().weights();
    for (std::size_t d = 0; d < dim; ++d) out[d] += share * w[d];
  }
  return GlobalModel{ModelParams(std::move(out)), round + 1, k_total};
}

/// Splits updates by ONU and runs onu_aggregate on each group, ONUs ascending.
inline std::vector<OnuAggregate> aggregate_per_onu(std::span<const ClientUpdate> updates) {
  std::map<int, std::vector<ClientUpdate>> groups;
  for (const auto& u : updates) groups[u.id().onu].push_back(u);
  std::vector<OnuAggregate> out;
  out.reserve(groups.size());
  for (const auto& [onu, members] : groups) out.push_back(onu_aggregate(members));
  return out;
}

}  // namespace sflpon
