#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sflpon/orchestrator.hpp"

// JSON experiment configuration. Every key is optional; missing keys keep the
// defaults, which reproduce the 16-ONU, 100 Mbps, 25 s setup. Unknown keys
// and type errors are rejected with the dotted path of the offending field.

namespace sflpon {

using ordered_json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorCode::InvalidConfig, field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace detail {

// Infinite values are spelled "inf" since JSON numbers cannot hold them.
inline ordered_json number_or_inf(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  // Call after all reads; rejects keys nobody asked for.
  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.contains(key)) throw ConfigError(field(key), "unknown key");
    }
  }

  void read(const char* key, double& out) {
    if (const auto* v = find(key)) {
      if (v->is_string()) {
        const auto s = v->get<std::string>();
        if (s == "inf" || s == "infinity") {
          out = std::numeric_limits<double>::infinity();
          return;
        }
        throw ConfigError(field(key), "expected a number or \"inf\"");
      }
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  void read(const char* key, int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      const auto value = v->get<long long>();
      if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
        throw ConfigError(field(key), "integer out of range");
      }
      out = static_cast<int>(value);
    }
  }

  void read(const char* key, std::uint64_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read_range(const char* key, double& lo, double& hi) {
    if (const auto* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        throw ConfigError(field(key), "expected [min, max]");
      }
      lo = (*v)[0].get<double>();
      hi = (*v)[1].get<double>();
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      const auto parsed = parse(v->get<std::string>());
      if (!parsed) throw ConfigError(field(key), "unrecognized value \"" + v->get<std::string>() + "\"");
      out = *parsed;
    }
  }

  std::optional<ConfigReader> child(const char* key) {
    if (const auto* v = find(key)) return ConfigReader(*v, field(key));
    return std::nullopt;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const nlohmann::json* find(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  const nlohmann::json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline std::optional<Mode> parse_mode(const std::string& s) {
  if (s == "classical") return Mode::Classical;
  if (s == "sfl") return Mode::Sfl;
  return std::nullopt;
}

inline std::optional<OnuWaitPolicy> parse_wait_policy(const std::string& s) {
  if (s == "all") return OnuWaitPolicy::All;
  if (s == "cutoff") return OnuWaitPolicy::Cutoff;
  return std::nullopt;
}

inline std::optional<SelectionPolicy> parse_selection(const std::string& s) {
  if (s == "uniform") return SelectionPolicy::Uniform;
  if (s == "onu_balanced") return SelectionPolicy::OnuBalanced;
  return std::nullopt;
}

inline ordered_json to_json(const ExperimentConfig& cfg) {
  const auto& t = cfg.topology;
  const auto& n = cfg.network;
  const auto& p = cfg.partition;
  const auto& h = cfg.hyper;
  ordered_json j;
  j["seed"] = cfg.seed;
  j["mode"] = to_string(cfg.mode);
  j["selection"] = to_string(cfg.selection);
  j["n_selected"] = cfg.n_selected;
  j["n_rounds"] = cfg.n_rounds;
  j["workers"] = cfg.workers;
  j["topology"] = {{"n_onus", t.n_onus}, {"clients_per_onu", t.clients_per_onu}, {"distance_km", t.distance_km}};
  j["network"] = {
      {"slice_rate_bps", n.slice_rate_bps},
      {"model_bits", n.model_bits},
      {"t_download_s", n.t_download_s},
      {"t_train_range_s", {n.t_train_min_s, n.t_train_max_s}},
      {"t_wireless_range_s", {n.t_wireless_min_s, n.t_wireless_max_s}},
      {"sync_threshold_s", detail::number_or_inf(n.sync_threshold_s)},
      {"t_agg_s", n.t_agg_s},
      {"propagation_velocity_m_per_s", n.propagation_velocity_m_per_s},
      {"onu_wait_policy", to_string(n.onu_wait_policy)},
      {"local_cutoff_s", n.local_cutoff_s},
  };
  j["partition"] = {
      {"n_classes", p.n_classes},       {"feature_dim", p.feature_dim},
      {"k_min", p.k_min},               {"k_max", p.k_max},
      {"skew", p.skew},                 {"class_separation", p.class_separation},
      {"test_samples", p.test_samples},
  };
  j["hyper"] = {
      {"learning_rate", h.learning_rate},
      {"batch_size", h.batch_size},
      {"local_epochs", h.local_epochs},
      {"l2_penalty", h.l2_penalty},
  };
  return j;
}

/// Parses and validates. The partition's client count always follows the
/// topology; its seed is derived from the root seed at run time.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  detail::ConfigReader root(j, "");
  root.read("seed", cfg.seed);
  root.read_enum("mode", cfg.mode, parse_mode);
  root.read_enum("selection", cfg.selection, parse_selection);
  root.read("n_selected", cfg.n_selected);
  root.read("n_rounds", cfg.n_rounds);
  root.read("workers", cfg.workers);
  if (auto t = root.child("topology")) {
    t->read("n_onus", cfg.topology.n_onus);
    t->read("clients_per_onu", cfg.topology.clients_per_onu);
    t->read("distance_km", cfg.topology.distance_km);
    t->finish();
  }
  if (auto n = root.child("network")) {
    auto& net = cfg.network;
    n->read("slice_rate_bps", net.slice_rate_bps);
    n->read("model_bits", net.model_bits);
    n->read("t_download_s", net.t_download_s);
    n->read_range("t_train_range_s", net.t_train_min_s, net.t_train_max_s);
    n->read_range("t_wireless_range_s", net.t_wireless_min_s, net.t_wireless_max_s);
    n->read("sync_threshold_s", net.sync_threshold_s);
    n->read("t_agg_s", net.t_agg_s);
    n->read("propagation_velocity_m_per_s", net.propagation_velocity_m_per_s);
    n->read_enum("onu_wait_policy", net.onu_wait_policy, parse_wait_policy);
    n->read("local_cutoff_s", net.local_cutoff_s);
    n->finish();
  }
  if (auto p = root.child("partition")) {
    auto& part = cfg.partition;
    p->read("n_classes", part.n_classes);
    p->read("feature_dim", part.feature_dim);
    p->read("k_min", part.k_min);
    p->read("k_max", part.k_max);
    p->read("skew", part.skew);
    p->read("class_separation", part.class_separation);
    p->read("test_samples", part.test_samples);
    p->finish();
  }
  if (auto h = root.child("hyper")) {
    h->read("learning_rate", cfg.hyper.learning_rate);
    h->read("batch_size", cfg.hyper.batch_size);
    h->read("local_epochs", cfg.hyper.local_epochs);
    h->read("l2_penalty", cfg.hyper.l2_penalty);
    h->finish();
  }
  root.finish();
  cfg.partition.n_clients = cfg.topology.population();
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace sflpon
