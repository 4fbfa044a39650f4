// SPDX-License-Identifier: Apache-2.0
#include "trendnet/actioner.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "trendnet/error.hpp"

namespace trendnet::actioner {

using netsim::DeviceKind;
using netsim::FlowEntry;
using netsim::InterfaceRef;
using netsim::RouteMapDirective;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Policy p) noexcept { return p == Policy::Auto ? "auto" : "manual"; }

Policy policy_from_string(std::string_view text) {
  if (text == "auto") return Policy::Auto;
  if (text == "manual") return Policy::Manual;
  throw Error(ErrorCode::ValidationError, fmt::format("unknown policy '{}'", text));
}

std::string_view to_string(Domain d) noexcept { return d == Domain::Traditional ? "traditional" : "sdn"; }

std::string_view to_string(Status s) noexcept {
  switch (s) {
    case Status::Planned: return "planned";
    case Status::Applied: return "applied";
    case Status::Reverted: return "reverted";
    case Status::Failed: return "failed";
  }
  return "?";
}

namespace {

Status status_from_string(std::string_view text) {
  for (auto s : {Status::Planned, Status::Applied, Status::Reverted, Status::Failed}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::ParseError, fmt::format("unknown status '{}'", text));
}

json ref_json(const InterfaceRef& r) { return json{{"device", r.device}, {"interface", r.interface}}; }

InterfaceRef ref_from(const json& j) {
  return InterfaceRef{j.at("device").get<std::string>(), j.at("interface").get<std::string>()};
}

json opt_ts(const std::optional<TimestampMs>& t) { return t ? json(*t) : json(nullptr); }

std::optional<TimestampMs> opt_ts_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<TimestampMs>();
}

}  // namespace

std::vector<std::string> ActionerConfig::violations() const {
  std::vector<std::string> out;
  if (!(lp_low < netsim::kDefaultLocalPreference)) {
    out.push_back(fmt::format("actioner.lp_low must be below {}, got {}", netsim::kDefaultLocalPreference, lp_low));
  }
  if (!(lp_high > netsim::kDefaultLocalPreference)) {
    out.push_back(fmt::format("actioner.lp_high must be above {}, got {}", netsim::kDefaultLocalPreference, lp_high));
  }
  if (!(flow_priority > netsim::kBaselineFlowPriority)) {
    out.push_back(fmt::format("actioner.priority must be above {}, got {}", netsim::kBaselineFlowPriority,
                              flow_priority));
  }
  if (duration_periods <= 0) {
    out.push_back(fmt::format("actioner.duration_periods must be positive, got {}", duration_periods));
  }
  return out;
}

ordered_json LoadBalanceDecision::to_json() const {
  ordered_json rendered = ordered_json::array();
  for (const auto& d : directives) {
    rendered.push_back({{"router_id", d.router_id},
                        {"prefix", d.prefix.str()},
                        {"egress_interface", d.egress_interface},
                        {"local_preference", d.local_preference},
                        {"mode", d.mode == RouteMapDirective::Mode::Set ? "set" : "clear"}});
  }
  for (const auto& f : flows) {
    rendered.push_back({{"switch_id", f.switch_id},
                        {"cookie", f.cookie},
                        {"priority", f.priority},
                        {"match_dst_prefix", f.match_dst_prefix.str()},
                        {"action_out_port", f.action_out_port},
                        {"hard_timeout_s", f.hard_timeout_s ? json(*f.hard_timeout_s) : json(nullptr)}});
  }
  ordered_json j;
  j["id"] = id;
  j["trend_event_id"] = trend_event_id;
  j["domain"] = to_string(domain);
  j["affected_prefix"] = affected_prefix.str();
  j["congested"] = ref_json(congested);
  j["alternate"] = ref_json(alternate);
  j["rendered"] = std::move(rendered);
  j["created_at"] = created_at_ms;
  j["applied_at"] = opt_ts(applied_at_ms);
  j["duration_ms"] = duration_ms;
  j["reverted_at"] = opt_ts(reverted_at_ms);
  j["status"] = to_string(status);
  j["error"] = error;
  return j;
}

LoadBalanceDecision LoadBalanceDecision::from_json(const json& j) {
  try {
    LoadBalanceDecision d;
    d.id = j.at("id").get<std::string>();
    d.trend_event_id = j.at("trend_event_id").get<std::string>();
    d.domain = j.at("domain").get<std::string>() == "sdn" ? Domain::Sdn : Domain::Traditional;
    d.affected_prefix = Cidr::parse(j.at("affected_prefix").get<std::string>());
    d.congested = ref_from(j.at("congested"));
    d.alternate = ref_from(j.at("alternate"));
    for (const auto& r : j.at("rendered")) {
      if (r.contains("router_id")) {
        RouteMapDirective rd;
        rd.router_id = r.at("router_id").get<std::string>();
        rd.prefix = Cidr::parse(r.at("prefix").get<std::string>());
        rd.egress_interface = r.at("egress_interface").get<std::string>();
        rd.local_preference = r.at("local_preference").get<int>();
        rd.mode = r.at("mode").get<std::string>() == "clear" ? RouteMapDirective::Mode::Clear
                                                              : RouteMapDirective::Mode::Set;
        d.directives.push_back(std::move(rd));
      } else {
        FlowEntry f;
        f.switch_id = r.at("switch_id").get<std::string>();
        f.cookie = r.at("cookie").get<std::uint64_t>();
        f.priority = r.at("priority").get<int>();
        f.match_dst_prefix = Cidr::parse(r.at("match_dst_prefix").get<std::string>());
        f.action_out_port = r.at("action_out_port").get<std::string>();
        if (!r.at("hard_timeout_s").is_null()) f.hard_timeout_s = r.at("hard_timeout_s").get<std::int64_t>();
        d.flows.push_back(std::move(f));
      }
    }
    d.created_at_ms = j.at("created_at").get<TimestampMs>();
    d.applied_at_ms = opt_ts_from(j.at("applied_at"));
    d.duration_ms = j.at("duration_ms").get<DurationMs>();
    d.reverted_at_ms = opt_ts_from(j.at("reverted_at"));
    d.status = status_from_string(j.at("status").get<std::string>());
    d.error = j.value("error", std::string{});
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("decision document: {}", e.what()));
  }
}

InterfaceRef choose_alternate(const netsim::SimNetwork& net, const InterfaceRef& congested,
                              const Cidr& dst, const std::map<InterfaceRef, double>& utilization,
                              const std::set<std::string>& upstream) {
  std::optional<InterfaceRef> best;
  double best_util = 0.0;
  for (const auto& name : net.egress_candidates(congested.device, dst, upstream)) {
    if (name == congested.interface) continue;
    InterfaceRef ref{congested.device, name};
    auto it = utilization.find(ref);
    const double u = it == utilization.end() ? 0.0 : it->second;
    // Candidates arrive sorted by name, so strict < keeps the smallest on ties.
    if (!best || u < best_util) {
      best = ref;
      best_util = u;
    }
  }
  if (!best) {
    throw Error(ErrorCode::NoAlternatePath,
                fmt::format("{} has no other egress toward {}", congested.device, dst.str()));
  }
  return *best;
}

std::vector<RouteMapDirective> plan_traditional(const Cidr& prefix, const InterfaceRef& congested,
                                                const InterfaceRef& alternate, const ActionerConfig& cfg) {
  return {
      RouteMapDirective{congested.device, prefix, congested.interface, cfg.lp_low, RouteMapDirective::Mode::Set},
      RouteMapDirective{alternate.device, prefix, alternate.interface, cfg.lp_high, RouteMapDirective::Mode::Set},
  };
}

FlowEntry plan_sdn(const Cidr& prefix, const InterfaceRef& alternate, const ActionerConfig& cfg,
                   DurationMs duration_ms, std::uint64_t cookie) {
  FlowEntry f;
  f.switch_id = alternate.device;
  f.cookie = cookie;
  f.priority = cfg.flow_priority;
  f.match_dst_prefix = prefix;
  f.action_out_port = alternate.interface;
  if (cfg.timeout_mode) f.hard_timeout_s = duration_ms / kSecondMs;
  return f;
}

namespace {

RouteMapDirective clear_of(RouteMapDirective d) {
  d.mode = RouteMapDirective::Mode::Clear;
  d.local_preference = netsim::kDefaultLocalPreference;
  return d;
}

}  // namespace

LoadBalanceDecision execute(LoadBalanceDecision d, netsim::SimNetwork& net, TimestampMs now_ms) {
  if (d.status != Status::Planned) {
    throw Error(ErrorCode::IllegalTransition,
                fmt::format("{}: execute needs planned, status is {}", d.id, to_string(d.status)));
  }
  std::size_t applied = 0;
  try {
    for (const auto& rd : d.directives) {
      net.apply_route_map(rd);
      ++applied;
    }
    for (const auto& f : d.flows) {
      net.install_flow(f);
      ++applied;
    }
  } catch (const Error& e) {
    const auto n_dir = std::min(applied, d.directives.size());
    for (std::size_t i = applied - n_dir; i-- > 0;) net.remove_flow(d.flows[i].switch_id, d.flows[i].cookie);
    for (std::size_t i = n_dir; i-- > 0;) net.apply_route_map(clear_of(d.directives[i]));
    d.status = Status::Failed;
    d.error = e.what();
    return d;
  }
  d.status = Status::Applied;
  d.applied_at_ms = now_ms;
  return d;
}

LoadBalanceDecision revert(LoadBalanceDecision d, netsim::SimNetwork& net, TimestampMs now_ms,
                           bool timeout_mode) {
  if (d.status != Status::Applied) {
    throw Error(ErrorCode::IllegalTransition,
                fmt::format("{}: revert needs applied, status is {}", d.id, to_string(d.status)));
  }
  for (const auto& rd : d.directives) net.apply_route_map(clear_of(rd));
  for (const auto& f : d.flows) {
    try {
      net.remove_flow(f.switch_id, f.cookie);
    } catch (const Error& e) {
      if (!(timeout_mode && e.code() == ErrorCode::UnknownCookie)) throw;
    }
  }
  d.status = Status::Reverted;
  d.reverted_at_ms = now_ms;
  return d;
}

std::optional<Cidr> dominant_prefix(const std::map<Cidr, std::uint64_t>& dst_octets) {
  std::optional<Cidr> best;
  std::uint64_t most = 0;
  for (const auto& [prefix, octets] : dst_octets) {
    if (!best || octets > most) {
      best = prefix;
      most = octets;
    }
  }
  return best;
}

Actioner::Actioner(netsim::SimNetwork& net, VirtualScheduler& scheduler, ActionerConfig cfg,
                   ChangeHook on_change)
    : net_(net),
      scheduler_(scheduler),
      cfg_(cfg),
      on_change_(std::move(on_change)),
      next_cookie_(cfg.first_cookie) {}

LoadBalanceDecision& Actioner::find(const std::string& id) {
  for (auto& d : decisions_) {
    if (d.id == id) return d;
  }
  throw Error(ErrorCode::UnknownDecision, fmt::format("no decision '{}'", id));
}

const LoadBalanceDecision& Actioner::decision(const std::string& id) const {
  return const_cast<Actioner*>(this)->find(id);
}

std::vector<LoadBalanceDecision> Actioner::decisions() const { return decisions_; }

bool Actioner::locked(const std::string& device, const Cidr& prefix) const {
  return std::any_of(decisions_.begin(), decisions_.end(), [&](const auto& d) {
    return d.congested.device == device && d.affected_prefix == prefix &&
           (d.status == Status::Planned || d.status == Status::Applied);
  });
}

void Actioner::store(const LoadBalanceDecision& d) {
  if (on_change_) on_change_(d);
}

void Actioner::schedule_revert(const LoadBalanceDecision& d) {
  const auto id = d.id;
  revert_tasks_[id] = scheduler_.schedule_at(*d.applied_at_ms + d.duration_ms, [this, id](TimestampMs at) {
    revert_tasks_.erase(id);
    auto& dec = find(id);
    if (dec.status != Status::Applied) return;
    dec = actioner::revert(dec, net_, at, cfg_.timeout_mode);
    spdlog::info("{} reverted at {}", id, iso8601_ms(at));
    store(dec);
  });
}

void Actioner::apply_now(LoadBalanceDecision& d) {
  d = execute(d, net_, net_.clock().now_ms);
  if (d.status == Status::Applied) {
    spdlog::info("{} applied: {} {} -> {}", d.id, d.affected_prefix.str(), d.congested.interface,
                 d.alternate.interface);
    schedule_revert(d);
  } else {
    spdlog::warn("{} failed: {}", d.id, d.error);
  }
  store(d);
}

std::optional<LoadBalanceDecision> Actioner::on_trend(const analytics::TrendTransition& transition,
                                                      const TrendContext& ctx) {
  if (transition.kind != analytics::TransitionKind::Confirmed) return std::nullopt;
  const auto& congested = ctx.congested;
  const auto prefix = dominant_prefix(ctx.dst_octets);
  if (!prefix) {
    spdlog::info("trend {}: no traffic attributed to {}/{}, nothing to move", transition.event.id,
                 congested.device, congested.interface);
    return std::nullopt;
  }
  if (locked(congested.device, *prefix)) {
    spdlog::info("trend {}: {} already has an open decision for {}", transition.event.id,
                 congested.device, prefix->str());
    return std::nullopt;
  }

  std::optional<std::set<std::string>> upstream;
  for (const auto& demand : net_.profile().demands) {
    if (demand.dst != *prefix) continue;
    netsim::Path path;
    try {
      path = net_.resolve_path(demand.src, demand.dst);
    } catch (const Error&) {
      continue;
    }
    std::set<std::string> before;
    for (const auto& hop : path) {
      if (hop.device == congested.device && hop.egress == congested.interface) {
        upstream = before;
        break;
      }
      before.insert(hop.device);
    }
    if (upstream) break;
  }
  if (!upstream) {
    spdlog::info("trend {}: {}/{} no longer carries {}, skipping", transition.event.id,
                 congested.device, congested.interface, prefix->str());
    return std::nullopt;
  }

  LoadBalanceDecision d;
  d.id = fmt::format("dec-{}", next_id_++);
  d.trend_event_id = transition.event.id;
  d.domain = net_.device(congested.device).kind == DeviceKind::Traditional ? Domain::Traditional
                                                                            : Domain::Sdn;
  d.affected_prefix = *prefix;
  d.congested = congested;
  d.created_at_ms = net_.clock().now_ms;
  d.duration_ms = cfg_.duration_ms();
  try {
    d.alternate = choose_alternate(net_, congested, *prefix, ctx.utilization, *upstream);
    if (d.domain == Domain::Traditional) {
      d.directives = plan_traditional(*prefix, congested, d.alternate, cfg_);
    } else {
      const auto cookie = std::max(next_cookie_, net_.next_free_cookie(congested.device));
      next_cookie_ = cookie + 1;
      d.flows = {plan_sdn(*prefix, d.alternate, cfg_, d.duration_ms, cookie)};
    }
  } catch (const Error& e) {
    d.status = Status::Failed;
    d.error = e.what();
    spdlog::warn("{} failed at planning: {}", d.id, d.error);
    decisions_.push_back(d);
    store(d);
    return d;
  }
  decisions_.push_back(d);
  store(d);
  if (cfg_.policy == Policy::Auto) apply_now(decisions_.back());
  return decisions_.back();
}

LoadBalanceDecision Actioner::approve(const std::string& id) {
  auto& d = find(id);
  if (d.status != Status::Planned) {
    throw Error(ErrorCode::IllegalTransition,
                fmt::format("{}: approve needs planned, status is {}", id, to_string(d.status)));
  }
  apply_now(d);
  return d;
}

LoadBalanceDecision Actioner::revert(const std::string& id) {
  auto& d = find(id);
  d = actioner::revert(d, net_, net_.clock().now_ms, cfg_.timeout_mode);
  if (auto it = revert_tasks_.find(id); it != revert_tasks_.end()) {
    scheduler_.cancel(it->second);
    revert_tasks_.erase(it);
  }
  store(d);
  return d;
}

void Actioner::restore(const std::vector<LoadBalanceDecision>& decisions) {
  for (const auto& [_, task] : revert_tasks_) scheduler_.cancel(task);
  revert_tasks_.clear();
  decisions_ = decisions;
  for (const auto& d : decisions_) {
    if (auto dash = d.id.rfind('-'); dash != std::string::npos) {
      next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(d.id.substr(dash + 1)) + 1);
    }
    for (const auto& f : d.flows) next_cookie_ = std::max(next_cookie_, f.cookie + 1);
    if (d.status == Status::Applied) schedule_revert(d);
  }
}

}  // namespace trendnet::actioner
