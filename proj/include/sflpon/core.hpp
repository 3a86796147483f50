#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sflpon {

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteWeight,
  ZeroSamples,
  InvalidClientId,
  EmptyInput,
  MixedOnu,
  EmptyBatch,
  InvalidHyperParams,
  InvalidConfig,
  EmptySelection,
  InvalidCounts,
  TooManyRequested,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorCode::ZeroSamples: return "ZeroSamples";
    case ErrorCode::InvalidClientId: return "InvalidClientId";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MixedOnu: return "MixedOnu";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::InvalidHyperParams: return "InvalidHyperParams";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::TooManyRequested: return "TooManyRequested";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure in the library is reported through this exception; the code
// lets callers (and tests) tell the cases apart without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Flat vector of model coordinates. Always non-empty and finite.
class ModelParams {
 public:
  explicit ModelParams(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) {
      throw Error(ErrorCode::DimensionMismatch, "model must have at least one coordinate");
    }
    for (std::size_t d = 0; d < weights_.size(); ++d) {
      if (!std::isfinite(weights_[d])) {
        throw Error(ErrorCode::NonFiniteWeight, "coordinate " + std::to_string(d) + " is not finite");
      }
    }
  }

  static ModelParams zeros(std::size_t dim) { return ModelParams(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t d) const { return weights_[d]; }

  bool operator==(const ModelParams&) const = default;

 private:
  std::vector<double> weights_;
};

/// 1-based (ONU, client) pair; ordering is the canonical aggregation order.
struct ClientId {
  int onu = 1;
  int client = 1;

  auto operator<=>(const ClientId&) const = default;
};

inline std::string to_string(const ClientId& id) {
  return "(" + std::to_string(id.onu) + "," + std::to_string(id.client) + ")";
}

struct Topology {
  int n_onus = 16;
  int clients_per_onu = 20;
  double distance_km = 20.0;

  int population() const noexcept { return n_onus * clients_per_onu; }

  bool contains(const ClientId& id) const noexcept {
    return id.onu >= 1 && id.onu <= n_onus && id.client >= 1 && id.client <= clients_per_onu;
  }

  // Dense index in [0, population), ONU-major.
  std::size_t flat_index(const ClientId& id) const {
    return static_cast<std::size_t>(id.onu - 1) * static_cast<std::size_t>(clients_per_onu) +
           static_cast<std::size_t>(id.client - 1);
  }

  ClientId from_flat(std::size_t index) const {
    const auto m = static_cast<std::size_t>(clients_per_onu);
    return ClientId{static_cast<int>(index / m) + 1, static_cast<int>(index % m) + 1};
  }

  void validate() const {
    if (n_onus < 1) throw Error(ErrorCode::InvalidConfig, "topology.n_onus must be >= 1");
    if (clients_per_onu < 1) throw Error(ErrorCode::InvalidConfig, "topology.clients_per_onu must be >= 1");
    if (!(distance_km >= 0.0) || !std::isfinite(distance_km)) {
      throw Error(ErrorCode::InvalidConfig, "topology.distance_km must be finite and >= 0");
    }
  }
};

class ClientUpdate {
 public:
  ClientUpdate(ClientId id, ModelParams params, std::int64_t sample_count)
      : id_(id), params_(std::move(params)), sample_count_(sample_count) {
    if (sample_count_ < 1) {
      throw Error(ErrorCode::ZeroSamples, "client " + to_string(id_) + " reports no samples");
    }
    if (id_.onu < 1 || id_.client < 1) {
      throw Error(ErrorCode::InvalidClientId, "client ids are 1-based, got " + to_string(id_));
    }
  }

  const ClientId& id() const noexcept { return id_; }
  const ModelParams& params() const noexcept { return params_; }
  std::int64_t sample_count() const noexcept { return sample_count_; }

  bool operator==(const ClientUpdate&) const = default;

 private:
  ClientId id_;
  ModelParams params_;
  std::int64_t sample_count_;
};

/// First-step result at one ONU: theta is the sample-weighted SUM of the
/// member models, not their mean.
class OnuAggregate {
 public:
  OnuAggregate(int onu_index, ModelParams theta, std::int64_t k_total, int client_count)
      : onu_index_(onu_index), theta_(std::move(theta)), k_total_(k_total), client_count_(client_count) {
    if (client_count_ < 1 || k_total_ < client_count_) {
      throw Error(ErrorCode::InvalidCounts, "ONU aggregate needs k_total >= client_count >= 1");
    }
  }

  int onu_index() const noexcept { return onu_index_; }
  const ModelParams& theta() const noexcept { return theta_; }
  std::int64_t k_total() const noexcept { return k_total_; }
  int client_count() const noexcept { return client_count_; }

 private:
  int onu_index_;
  ModelParams theta_;
  std::int64_t k_total_;
  int client_count_;
};

struct GlobalModel {
  ModelParams params;
  int round = 0;
  std::int64_t k_total = 0;
};

/// One client's one-round synchronization time, split by cause. In SFL mode
/// t_agg also absorbs the time a client waits at its ONU for slower peers.
struct TimingSample {
  double t_download = 0.0;
  double t_train = 0.0;
  double t_wireless = 0.0;
  double t_pon = 0.0;
  double t_agg = 0.0;

  double total() const noexcept { return t_download + t_train + t_wireless + t_pon + t_agg; }
};

/// Checks an incoming update against the model layout and, optionally, the
/// active topology. Throws Error on the first violation.
inline void validate_update(const ClientUpdate& update, std::size_t expected_dim,
                            const std::optional<Topology>& topology = std::nullopt) {
  if (update.params().dim() != expected_dim) {
    throw Error(ErrorCode::DimensionMismatch, "update from " + to_string(update.id()) + " has dim " +
                                                  std::to_string(update.params().dim()) + ", expected " +
                                                  std::to_string(expected_dim));
  }
  if (topology && !topology->contains(update.id())) {
    throw Error(ErrorCode::InvalidClientId, "client " + to_string(update.id()) + " is outside the topology");
  }
}

}  // namespace sflpon
