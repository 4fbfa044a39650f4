// SPDX-License-Identifier: Apache-2.0
//
// In-process network simulator: traditional routers forwarding on local
// preference and SDN switches forwarding on priority-ordered flow tables,
// driven by a diurnal traffic profile under a virtual clock.
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "trendnet/cidr.hpp"
#include "trendnet/counters.hpp"
#include "trendnet/time_util.hpp"

namespace trendnet::netsim {

enum class DeviceKind { Traditional, SdnSwitch };

std::string_view to_string(DeviceKind kind) noexcept;
DeviceKind device_kind_from_string(std::string_view text);  // throws Error(ValidationError)

inline constexpr int kDefaultLocalPreference = 100;
inline constexpr int kBaselineFlowPriority = 100;
inline constexpr std::uint64_t kPacketSizeOctets = 1000;
inline constexpr std::int64_t kDefaultAccessCapacityBps = 8'000'000;

struct InterfaceRef {
  std::string device;
  std::string interface;

  friend auto operator<=>(const InterfaceRef&, const InterfaceRef&) = default;
};

struct DeviceSpec {
  std::string id;
  DeviceKind kind = DeviceKind::Traditional;
  std::string mgmt_ip;
};

struct LinkSpec {
  InterfaceRef a;
  InterfaceRef b;
  std::int64_t capacity_bps = 0;
};

struct SubnetAttachment {
  InterfaceRef at;
  std::int64_t capacity_bps = kDefaultAccessCapacityBps;
};

struct TopologySpec {
  std::vector<DeviceSpec> devices;
  std::vector<LinkSpec> links;
  std::map<Cidr, SubnetAttachment> subnets;
};

struct Demand {
  Cidr src;
  Cidr dst;
  std::array<double, 24> hourly_mean_bps{};
  double noise_sigma_bps = 0.0;
};

struct TrafficProfile {
  std::vector<Demand> demands;
  std::uint64_t rng_seed = 1;
};

struct RouteMapDirective {
  enum class Mode { Set, Clear };

  std::string router_id;
  Cidr prefix;
  std::string egress_interface;
  int local_preference = kDefaultLocalPreference;
  Mode mode = Mode::Set;

  friend bool operator==(const RouteMapDirective&, const RouteMapDirective&) = default;
};

struct FlowEntry {
  std::string switch_id;
  std::uint64_t cookie = 0;
  int priority = 0;
  Cidr match_dst_prefix;
  std::string action_out_port;
  std::optional<std::int64_t> hard_timeout_s;

  friend bool operator==(const FlowEntry&, const FlowEntry&) = default;
};

struct VirtualClock {
  TimestampMs now_ms = kDefaultEpochMs;
  double acceleration = 3600.0;  // virtual seconds per wall second
};

/// Scales one demand's offered load over [start_ms, end_ms).
struct Injection {
  Cidr src;
  Cidr dst;
  double factor = 1.0;
  TimestampMs start_ms = 0;
  TimestampMs end_ms = 0;
};

struct CounterSample {
  std::string device;
  std::string host_ip;
  std::string interface;
  CounterSet counters;
  TimestampMs timestamp_ms = 0;
};

struct Hop {
  std::string device;
  std::string egress;

  friend auto operator<=>(const Hop&, const Hop&) = default;
};
using Path = std::vector<Hop>;

struct LinkLoad {
  InterfaceRef egress;
  std::uint64_t octets = 0;          // carried this tick
  std::uint64_t dropped_octets = 0;  // excess over capacity this tick
  double carried_bps = 0.0;
  double dropped_bps = 0.0;
};

struct DemandReport {
  Cidr src;
  Cidr dst;
  double offered_bps = 0.0;
  std::vector<std::pair<InterfaceRef, std::uint64_t>> hop_octets;  // per traversed egress
  bool unroutable = false;
  std::string error;
};

struct TickReport {
  TimestampMs start_ms = 0;
  DurationMs dt_ms = 0;
  std::vector<LinkLoad> loads;  // only interfaces that carried or dropped traffic
  std::vector<DemandReport> demands;
};

class SimNetwork {
 public:
  /// Validates `spec` and returns a network with zeroed counters, default
  /// local preference everywhere and baseline flows on every switch.
  static SimNetwork build(const TopologySpec& spec, const TrafficProfile& profile,
                          VirtualClock clock = {});

  TickReport step(DurationMs dt_ms);

  Path resolve_path(const Cidr& src, const Cidr& dst) const;

  void apply_route_map(const RouteMapDirective& directive);
  void install_flow(const FlowEntry& entry);
  void remove_flow(const std::string& switch_id, std::uint64_t cookie);

  std::vector<CounterSample> read_counters(const std::string& device_id) const;
  std::vector<CounterSample> read_flow_stats() const;

  const VirtualClock& clock() const noexcept { return clock_; }
  const TopologySpec& topology() const noexcept { return spec_; }
  const TrafficProfile& profile() const noexcept { return profile_; }

  const DeviceSpec& device(const std::string& id) const;  // throws UnknownDevice
  bool has_device(const std::string& id) const noexcept { return devices_.contains(id); }
  std::vector<std::string> interface_names(const std::string& device_id) const;
  std::int64_t capacity(const InterfaceRef& ref) const;
  std::optional<InterfaceRef> peer(const InterfaceRef& ref) const;
  std::optional<InterfaceRef> interface_by_host(const std::string& host_ip,
                                                const std::string& interface) const;
  bool is_link_interface(const InterfaceRef& ref) const;

  int local_preference(const std::string& router, const Cidr& prefix,
                       const std::string& egress) const;
  std::vector<FlowEntry> flow_table(const std::string& switch_id) const;
  std::uint64_t next_free_cookie(const std::string& switch_id) const;

  /// Egress interfaces of `device` from which `dst` is reachable without
  /// revisiting any device in `avoid` (the device itself is always avoided).
  std::vector<std::string> egress_candidates(const std::string& device, const Cidr& dst,
                                             const std::set<std::string>& avoid) const;

  void inject(const Injection& injection);
  const std::vector<Injection>& injections() const noexcept { return injections_; }
  void set_noise_enabled(bool enabled) noexcept { noise_enabled_ = enabled; }
  bool noise_enabled() const noexcept { return noise_enabled_; }

  /// Mutable state (clock, counters, preferences, flows, injections).
  nlohmann::json save_state() const;
  void restore_state(const nlohmann::json& state);

 private:
  struct InterfaceState {
    std::int64_t capacity_bps = 0;
    CounterSet counters;
    std::optional<InterfaceRef> peer;
    std::optional<Cidr> subnet;
  };
  struct InstalledFlow {
    FlowEntry entry;
    TimestampMs installed_at = 0;
  };
  struct DeviceState {
    DeviceSpec spec;
    std::map<std::string, InterfaceState> interfaces;
    std::map<std::pair<Cidr, std::string>, int> preferences;  // routers
    std::vector<InstalledFlow> flows;                         // switches
  };

  SimNetwork() = default;

  const DeviceState& state(const std::string& id) const;
  DeviceState& state(const std::string& id);
  const SubnetAttachment& attachment(const Cidr& prefix) const;
  std::optional<int> distance(const std::string& from, const std::string& to,
                              const std::set<std::string>& avoid) const;
  std::string next_traditional_egress(const DeviceState& dev, const Cidr& dst,
                                      const std::set<std::string>& visited) const;
  const InstalledFlow* best_flow(const DeviceState& dev, const Cidr& dst) const;
  void install_baseline_flows();
  void expire_flows(bool inclusive);
  std::optional<TimestampMs> next_flow_deadline() const;
  double offered_bps(std::size_t demand_index, TimestampMs tick_start) const;

  TopologySpec spec_;
  TrafficProfile profile_;
  VirtualClock clock_;
  std::map<std::string, DeviceState> devices_;
  std::vector<Injection> injections_;
  bool noise_enabled_ = true;
};

/// resolve_path for every ordered pair of distinct subnets; nullopt where no path.
std::map<std::pair<Cidr, Cidr>, std::optional<Path>> routing_function(const SimNetwork& net);

}  // namespace trendnet::netsim
