// SPDX-License-Identifier: Apache-2.0
//
// Load-balancing decisions: pick an alternate egress for a congested link,
// render route-map directives or flow entries, apply them to the simulator
// and revert after a fixed virtual duration.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "trendnet/analytics.hpp"
#include "trendnet/netsim.hpp"
#include "trendnet/scheduler.hpp"

namespace trendnet::actioner {

enum class Policy { Auto, Manual };
std::string_view to_string(Policy p) noexcept;
Policy policy_from_string(std::string_view text);  // throws Error(ValidationError)

struct ActionerConfig {
  int lp_low = 90;
  int lp_high = 110;
  int flow_priority = 200;
  int duration_periods = 6;
  DurationMs sample_period_ms = kHourMs;
  Policy policy = Policy::Auto;
  bool timeout_mode = true;
  std::uint64_t first_cookie = 1'000'000;

  DurationMs duration_ms() const noexcept { return duration_periods * sample_period_ms; }
  std::vector<std::string> violations() const;
};

enum class Domain { Traditional, Sdn };
enum class Status { Planned, Applied, Reverted, Failed };
std::string_view to_string(Domain d) noexcept;
std::string_view to_string(Status s) noexcept;

struct LoadBalanceDecision {
  std::string id;
  std::string trend_event_id;
  Domain domain = Domain::Traditional;
  Cidr affected_prefix;
  netsim::InterfaceRef congested;
  netsim::InterfaceRef alternate;
  std::vector<netsim::RouteMapDirective> directives;
  std::vector<netsim::FlowEntry> flows;
  TimestampMs created_at_ms = 0;
  std::optional<TimestampMs> applied_at_ms;
  DurationMs duration_ms = 0;
  std::optional<TimestampMs> reverted_at_ms;
  Status status = Status::Planned;
  std::string error;

  nlohmann::ordered_json to_json() const;
  static LoadBalanceDecision from_json(const nlohmann::json& j);

  friend bool operator==(const LoadBalanceDecision&, const LoadBalanceDecision&) = default;
};

/// Lowest-utilization egress of the congested device, other than the
/// congested one, that still reaches `dst` without passing `upstream`.
/// Ties go to the smallest interface name. Throws Error(NoAlternatePath).
netsim::InterfaceRef choose_alternate(const netsim::SimNetwork& net,
                                      const netsim::InterfaceRef& congested, const Cidr& dst,
                                      const std::map<netsim::InterfaceRef, double>& utilization,
                                      const std::set<std::string>& upstream);

std::vector<netsim::RouteMapDirective> plan_traditional(const Cidr& prefix,
                                                        const netsim::InterfaceRef& congested,
                                                        const netsim::InterfaceRef& alternate,
                                                        const ActionerConfig& cfg);

netsim::FlowEntry plan_sdn(const Cidr& prefix, const netsim::InterfaceRef& alternate,
                           const ActionerConfig& cfg, DurationMs duration_ms, std::uint64_t cookie);

/// All-or-nothing. On a control-surface error the applied part is rolled back
/// and the decision comes back failed. Throws Error(IllegalTransition) unless planned.
LoadBalanceDecision execute(LoadBalanceDecision decision, netsim::SimNetwork& net, TimestampMs now_ms);

/// Throws Error(IllegalTransition) unless applied.
LoadBalanceDecision revert(LoadBalanceDecision decision, netsim::SimNetwork& net, TimestampMs now_ms,
                           bool timeout_mode);

/// What the evaluator knows about the congested link when a trend confirms.
struct TrendContext {
  netsim::InterfaceRef congested;
  std::map<netsim::InterfaceRef, double> utilization;  // latest sample per interface
  std::map<Cidr, std::uint64_t> dst_octets;            // on `congested`, last period
};

/// Owns decisions; executes, schedules and reverts them on the virtual clock.
class Actioner {
 public:
  using ChangeHook = std::function<void(const LoadBalanceDecision&)>;

  Actioner(netsim::SimNetwork& net, VirtualScheduler& scheduler, ActionerConfig cfg,
           ChangeHook on_change = {});

  /// Confirmed transitions create a decision (applied under auto policy,
  /// planned under manual). Ended transitions do nothing.
  std::optional<LoadBalanceDecision> on_trend(const analytics::TrendTransition& transition,
                                              const TrendContext& ctx);

  /// Throws Error(UnknownDecision) or Error(IllegalTransition).
  LoadBalanceDecision approve(const std::string& id);
  LoadBalanceDecision revert(const std::string& id);

  std::vector<LoadBalanceDecision> decisions() const;
  const LoadBalanceDecision& decision(const std::string& id) const;

  /// Replaces the decision set, e.g. from a journal; reschedules open reverts.
  void restore(const std::vector<LoadBalanceDecision>& decisions);

  const ActionerConfig& config() const noexcept { return cfg_; }
  void set_config(const ActionerConfig& cfg) { cfg_ = cfg; }

 private:
  LoadBalanceDecision& find(const std::string& id);
  bool locked(const std::string& device, const Cidr& prefix) const;
  void apply_now(LoadBalanceDecision& d);
  void schedule_revert(const LoadBalanceDecision& d);
  void store(const LoadBalanceDecision& d);

  netsim::SimNetwork& net_;
  VirtualScheduler& scheduler_;
  ActionerConfig cfg_;
  ChangeHook on_change_;
  std::vector<LoadBalanceDecision> decisions_;
  std::map<std::string, VirtualScheduler::TaskId> revert_tasks_;
  std::uint64_t next_id_ = 1;
  std::uint64_t next_cookie_;
};

/// Dst prefix carrying the most octets; ties to the numerically lowest.
std::optional<Cidr> dominant_prefix(const std::map<Cidr, std::uint64_t>& dst_octets);

}  // namespace trendnet::actioner
