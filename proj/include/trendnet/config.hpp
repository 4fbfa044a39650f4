// SPDX-License-Identifier: Apache-2.0
//
// The system configuration document. A single JSON object with sections
// topology, traffic, collector, pipeline, analytics, actioner, server, sim.
// Missing keys take their defaults; unknown keys are rejected.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "trendnet/actioner.hpp"
#include "trendnet/analytics.hpp"
#include "trendnet/collector.hpp"
#include "trendnet/netsim.hpp"
#include "trendnet/pipeline.hpp"

namespace trendnet::service {

inline constexpr int kDefaultPort = 8080;
inline constexpr const char* kDefaultDataDir = "trendnet-data";
inline constexpr const char* kDefaultTopic = "telemetry";

struct SystemConfig {
  netsim::TopologySpec topology;
  netsim::TrafficProfile traffic;
  bool noise_enabled = true;
  collector::PollSchedule collector;
  pipeline::MetricAllowList allow;
  std::string topic = kDefaultTopic;
  analytics::AnalyticsConfig analytics;
  actioner::ActionerConfig actioner;
  int port = kDefaultPort;
  std::string data_dir = kDefaultDataDir;
  TimestampMs epoch_ms = kDefaultEpochMs;
  double acceleration = 3600.0;  // 0 pauses the wall-clock driver

  /// Defaults, including the demo topology and profile.
  static SystemConfig defaults();
};

/// Throws Error(ValidationError) whose details list every violation.
SystemConfig config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json config_to_json(const SystemConfig& cfg);

/// Throws Error(IoError), Error(ParseError) or Error(ValidationError).
SystemConfig load_config(const std::filesystem::path& path);

/// Applies `patch` (a partial document) to `current` for the fields that may
/// change while running: analytics (except sample_period_ms), actioner and
/// traffic.noise_enabled. Throws Error(ValidationError) naming anything else.
SystemConfig patch_runtime_config(const SystemConfig& current, const nlohmann::json& patch);

/// TRENDNET_PORT, when set, replaces the configured port.
void apply_env_overrides(SystemConfig& cfg);

}  // namespace trendnet::service
