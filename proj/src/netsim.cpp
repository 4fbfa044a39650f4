// SPDX-License-Identifier: Apache-2.0
#include "trendnet/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include <fmt/format.h>

#include "trendnet/error.hpp"

namespace trendnet::netsim {

namespace {

std::uint64_t packets_for(std::uint64_t octets) {
  return (octets + kPacketSizeOctets - 1) / kPacketSizeOctets;
}

std::uint64_t octets_for(double rate_bps, DurationMs dt_ms) {
  return static_cast<std::uint64_t>(std::floor(rate_bps * static_cast<double>(dt_ms) / 8000.0 + 1e-6));
}

std::string ref_str(const InterfaceRef& ref) { return ref.device + ":" + ref.interface; }

}  // namespace

std::string_view to_string(DeviceKind kind) noexcept {
  return kind == DeviceKind::Traditional ? "traditional" : "sdn-switch";
}

DeviceKind device_kind_from_string(std::string_view text) {
  if (text == "traditional") return DeviceKind::Traditional;
  if (text == "sdn-switch") return DeviceKind::SdnSwitch;
  throw Error(ErrorCode::ValidationError, fmt::format("unknown device kind '{}'", text));
}

SimNetwork SimNetwork::build(const TopologySpec& spec, const TrafficProfile& profile,
                             VirtualClock clock) {
  SimNetwork net;
  net.spec_ = spec;
  net.profile_ = profile;
  net.clock_ = clock;

  for (const auto& d : spec.devices) {
    parse_ipv4(d.mgmt_ip);
    if (!net.devices_.emplace(d.id, DeviceState{d, {}, {}, {}}).second) {
      throw Error(ErrorCode::DuplicateDeviceId, fmt::format("device '{}' declared twice", d.id));
    }
  }

  auto add_interface = [&net](const InterfaceRef& ref, std::int64_t capacity) -> InterfaceState& {
    auto it = net.devices_.find(ref.device);
    if (it == net.devices_.end()) {
      throw Error(ErrorCode::DanglingEndpoint,
                  fmt::format("endpoint {} references unknown device", ref_str(ref)));
    }
    if (capacity <= 0) {
      throw Error(ErrorCode::NonPositiveCapacity,
                  fmt::format("interface {} has capacity {}", ref_str(ref), capacity));
    }
    auto [pos, inserted] = it->second.interfaces.emplace(ref.interface, InterfaceState{});
    if (!inserted) {
      throw Error(ErrorCode::DuplicateInterface,
                  fmt::format("interface {} used twice", ref_str(ref)));
    }
    pos->second.capacity_bps = capacity;
    return pos->second;
  };

  for (const auto& link : spec.links) {
    add_interface(link.a, link.capacity_bps).peer = link.b;
    add_interface(link.b, link.capacity_bps).peer = link.a;
  }
  for (const auto& [prefix, att] : spec.subnets) {
    if (!net.devices_.contains(att.at.device)) {
      throw Error(ErrorCode::SubnetUnattached,
                  fmt::format("subnet {} attaches to unknown device '{}'", prefix.str(),
                              att.at.device));
    }
    add_interface(att.at, att.capacity_bps).subnet = prefix;
  }
  for (const auto& d : profile.demands) {
    if (!spec.subnets.contains(d.src) || !spec.subnets.contains(d.dst)) {
      throw Error(ErrorCode::UnknownPrefix,
                  fmt::format("demand {} -> {} references an unknown subnet", d.src.str(),
                              d.dst.str()));
    }
    const bool bad_mean = std::any_of(d.hourly_mean_bps.begin(), d.hourly_mean_bps.end(),
                                      [](double v) { return !(v >= 0.0) || !std::isfinite(v); });
    if (bad_mean || !(d.noise_sigma_bps >= 0.0)) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("demand {} -> {} has negative load or noise", d.src.str(),
                              d.dst.str()));
    }
  }

  net.install_baseline_flows();
  return net;
}

const SimNetwork::DeviceState& SimNetwork::state(const std::string& id) const {
  auto it = devices_.find(id);
  if (it == devices_.end()) {
    throw Error(ErrorCode::UnknownDevice, fmt::format("no device '{}'", id));
  }
  return it->second;
}

SimNetwork::DeviceState& SimNetwork::state(const std::string& id) {
  return const_cast<DeviceState&>(std::as_const(*this).state(id));
}

const DeviceSpec& SimNetwork::device(const std::string& id) const { return state(id).spec; }

const SubnetAttachment& SimNetwork::attachment(const Cidr& prefix) const {
  auto it = spec_.subnets.find(prefix);
  if (it == spec_.subnets.end()) {
    throw Error(ErrorCode::UnknownPrefix, fmt::format("no subnet {}", prefix.str()));
  }
  return it->second;
}

std::vector<std::string> SimNetwork::interface_names(const std::string& device_id) const {
  std::vector<std::string> names;
  for (const auto& [name, _] : state(device_id).interfaces) names.push_back(name);
  return names;
}

std::int64_t SimNetwork::capacity(const InterfaceRef& ref) const {
  const auto& dev = state(ref.device);
  auto it = dev.interfaces.find(ref.interface);
  if (it == dev.interfaces.end()) {
    throw Error(ErrorCode::UnknownInterface, fmt::format("no interface {}", ref_str(ref)));
  }
  return it->second.capacity_bps;
}

std::optional<InterfaceRef> SimNetwork::peer(const InterfaceRef& ref) const {
  const auto& dev = state(ref.device);
  auto it = dev.interfaces.find(ref.interface);
  if (it == dev.interfaces.end()) return std::nullopt;
  return it->second.peer;
}

bool SimNetwork::is_link_interface(const InterfaceRef& ref) const {
  return peer(ref).has_value();
}

std::optional<InterfaceRef> SimNetwork::interface_by_host(const std::string& host_ip,
                                                          const std::string& interface) const {
  for (const auto& [id, dev] : devices_) {
    if (dev.spec.mgmt_ip == host_ip && dev.interfaces.contains(interface)) {
      return InterfaceRef{id, interface};
    }
  }
  return std::nullopt;
}

std::optional<int> SimNetwork::distance(const std::string& from, const std::string& to,
                                        const std::set<std::string>& avoid) const {
  if (avoid.contains(from)) return std::nullopt;
  std::map<std::string, int> dist{{from, 0}};
  std::deque<std::string> queue{from};
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    if (cur == to) return dist[cur];
    for (const auto& [_, iface] : devices_.at(cur).interfaces) {
      if (!iface.peer) continue;
      const auto& next = iface.peer->device;
      if (avoid.contains(next) || dist.contains(next)) continue;
      dist[next] = dist[cur] + 1;
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

int SimNetwork::local_preference(const std::string& router, const Cidr& prefix,
                                 const std::string& egress) const {
  const auto& dev = state(router);
  int best_len = -1;
  int pref = kDefaultLocalPreference;
  for (const auto& [key, value] : dev.preferences) {
    if (key.second == egress && key.first.contains(prefix) && key.first.length > best_len) {
      best_len = key.first.length;
      pref = value;
    }
  }
  return pref;
}

std::string SimNetwork::next_traditional_egress(const DeviceState& dev, const Cidr& dst,
                                                const std::set<std::string>& visited) const {
  const auto& dst_device = attachment(dst).at.device;
  struct Candidate {
    int pref;
    int hops;
    std::string name;
  };
  std::optional<Candidate> best;
  for (const auto& [name, iface] : dev.interfaces) {
    if (!iface.peer || visited.contains(iface.peer->device)) continue;
    auto hops = distance(iface.peer->device, dst_device, visited);
    if (!hops) continue;
    Candidate c{local_preference(dev.spec.id, dst, name), *hops + 1, name};
    // highest preference, then shortest path, then smallest interface name
    if (!best || c.pref > best->pref || (c.pref == best->pref && c.hops < best->hops)) {
      best = c;
    }
  }
  if (!best) {
    throw Error(ErrorCode::NoPath,
                fmt::format("router {} has no route to {}", dev.spec.id, dst.str()));
  }
  return best->name;
}

const SimNetwork::InstalledFlow* SimNetwork::best_flow(const DeviceState& dev,
                                                       const Cidr& dst) const {
  const InstalledFlow* best = nullptr;
  for (const auto& f : dev.flows) {
    if (!f.entry.match_dst_prefix.contains(dst)) continue;
    if (!best) {
      best = &f;
      continue;
    }
    const auto& a = f.entry;
    const auto& b = best->entry;
    if (a.priority != b.priority ? a.priority > b.priority
        : a.match_dst_prefix.length != b.match_dst_prefix.length
            ? a.match_dst_prefix.length > b.match_dst_prefix.length
            : a.cookie < b.cookie) {
      best = &f;
    }
  }
  return best;
}

Path SimNetwork::resolve_path(const Cidr& src, const Cidr& dst) const {
  const auto& dst_att = attachment(dst);
  std::string cur = attachment(src).at.device;
  std::set<std::string> visited;
  Path path;
  while (true) {
    visited.insert(cur);
    if (cur == dst_att.at.device) {
      path.push_back({cur, dst_att.at.interface});
      return path;
    }
    const auto& dev = devices_.at(cur);
    std::string egress;
    if (dev.spec.kind == DeviceKind::Traditional) {
      egress = next_traditional_egress(dev, dst, visited);
    } else {
      const auto* flow = best_flow(dev, dst);
      if (!flow) {
        throw Error(ErrorCode::NoPath,
                    fmt::format("switch {} has no flow for {}", cur, dst.str()));
      }
      egress = flow->entry.action_out_port;
    }
    path.push_back({cur, egress});
    const auto& next = dev.interfaces.at(egress).peer;
    if (!next || visited.contains(next->device)) {
      throw Error(ErrorCode::NoPath, fmt::format("{} -> {} dead-ends or loops at {}:{}",
                                                 src.str(), dst.str(), cur, egress));
    }
    cur = next->device;
  }
}

std::vector<std::string> SimNetwork::egress_candidates(const std::string& device, const Cidr& dst,
                                                       const std::set<std::string>& avoid) const {
  const auto& dev = state(device);
  const auto& dst_device = attachment(dst).at.device;
  std::vector<std::string> out;
  for (const auto& [name, iface] : dev.interfaces) {
    if (!iface.peer) continue;
    std::set<std::string> visited = avoid;
    visited.insert(device);
    std::string cur = iface.peer->device;
    bool reached = false;
    // Follow the forwarding state hop by hop from the neighbour.
    while (!visited.contains(cur)) {
      visited.insert(cur);
      if (cur == dst_device) {
        reached = true;
        break;
      }
      const auto& hop = devices_.at(cur);
      std::string egress;
      if (hop.spec.kind == DeviceKind::Traditional) {
        try {
          egress = next_traditional_egress(hop, dst, visited);
        } catch (const Error&) {
          break;
        }
      } else {
        const auto* flow = best_flow(hop, dst);
        if (!flow) break;
        egress = flow->entry.action_out_port;
      }
      const auto& next = hop.interfaces.at(egress).peer;
      if (!next) break;
      cur = next->device;
    }
    if (reached) out.push_back(name);
  }
  return out;
}

void SimNetwork::install_baseline_flows() {
  for (auto& [id, dev] : devices_) {
    if (dev.spec.kind != DeviceKind::SdnSwitch) continue;
    std::uint64_t cookie = 1;
    for (const auto& [prefix, att] : spec_.subnets) {
      std::string port;
      if (att.at.device == id) {
        port = att.at.interface;
      } else {
        auto own = distance(id, att.at.device, {});
        if (!own) continue;
        for (const auto& [name, iface] : dev.interfaces) {
          if (!iface.peer) continue;
          auto d = distance(iface.peer->device, att.at.device, {});
          if (d && *d == *own - 1) {
            port = name;
            break;
          }
        }
      }
      dev.flows.push_back(
          {FlowEntry{id, cookie++, kBaselineFlowPriority, prefix, port, std::nullopt},
           clock_.now_ms});
    }
  }
}

void SimNetwork::apply_route_map(const RouteMapDirective& directive) {
  auto it = devices_.find(directive.router_id);
  if (it == devices_.end() || it->second.spec.kind != DeviceKind::Traditional) {
    throw Error(ErrorCode::UnknownRouter, fmt::format("no router '{}'", directive.router_id));
  }
  auto& dev = it->second;
  if (!dev.interfaces.contains(directive.egress_interface)) {
    throw Error(ErrorCode::UnknownInterface,
                fmt::format("router {} has no interface '{}'", directive.router_id,
                            directive.egress_interface));
  }
  const auto key = std::make_pair(directive.prefix, directive.egress_interface);
  if (directive.mode == RouteMapDirective::Mode::Clear) {
    dev.preferences.erase(key);
    return;
  }
  if (directive.local_preference <= 0) {
    throw Error(ErrorCode::ValidationError,
                fmt::format("local preference must be positive, got {}",
                            directive.local_preference));
  }
  dev.preferences[key] = directive.local_preference;
}

void SimNetwork::install_flow(const FlowEntry& entry) {
  auto it = devices_.find(entry.switch_id);
  if (it == devices_.end() || it->second.spec.kind != DeviceKind::SdnSwitch) {
    throw Error(ErrorCode::UnknownSwitch, fmt::format("no switch '{}'", entry.switch_id));
  }
  auto& dev = it->second;
  if (!dev.interfaces.contains(entry.action_out_port)) {
    throw Error(ErrorCode::UnknownPort, fmt::format("switch {} has no port '{}'", entry.switch_id,
                                                    entry.action_out_port));
  }
  if (std::any_of(dev.flows.begin(), dev.flows.end(),
                  [&](const InstalledFlow& f) { return f.entry.cookie == entry.cookie; })) {
    throw Error(ErrorCode::DuplicateCookie,
                fmt::format("switch {} already has cookie {}", entry.switch_id, entry.cookie));
  }
  if (entry.hard_timeout_s && *entry.hard_timeout_s < 0) {
    throw Error(ErrorCode::ValidationError, "hard timeout must be non-negative");
  }
  dev.flows.push_back({entry, clock_.now_ms});
}

void SimNetwork::remove_flow(const std::string& switch_id, std::uint64_t cookie) {
  auto it = devices_.find(switch_id);
  if (it == devices_.end() || it->second.spec.kind != DeviceKind::SdnSwitch) {
    throw Error(ErrorCode::UnknownSwitch, fmt::format("no switch '{}'", switch_id));
  }
  auto& flows = it->second.flows;
  auto pos = std::find_if(flows.begin(), flows.end(),
                          [&](const InstalledFlow& f) { return f.entry.cookie == cookie; });
  if (pos == flows.end()) {
    throw Error(ErrorCode::UnknownCookie,
                fmt::format("switch {} has no cookie {}", switch_id, cookie));
  }
  flows.erase(pos);
}

std::vector<FlowEntry> SimNetwork::flow_table(const std::string& switch_id) const {
  const auto& dev = state(switch_id);
  if (dev.spec.kind != DeviceKind::SdnSwitch) {
    throw Error(ErrorCode::UnknownSwitch, fmt::format("'{}' is not a switch", switch_id));
  }
  std::vector<FlowEntry> out;
  for (const auto& f : dev.flows) out.push_back(f.entry);
  return out;
}

std::uint64_t SimNetwork::next_free_cookie(const std::string& switch_id) const {
  std::uint64_t next = 1;
  for (const auto& f : flow_table(switch_id)) next = std::max(next, f.cookie + 1);
  return next;
}

void SimNetwork::expire_flows(bool inclusive) {
  for (auto& [_, dev] : devices_) {
    std::erase_if(dev.flows, [&](const InstalledFlow& f) {
      if (!f.entry.hard_timeout_s) return false;
      const auto deadline = f.installed_at + *f.entry.hard_timeout_s * kSecondMs;
      return inclusive ? deadline <= clock_.now_ms : deadline < clock_.now_ms;
    });
  }
}

std::optional<TimestampMs> SimNetwork::next_flow_deadline() const {
  std::optional<TimestampMs> next;
  for (const auto& [_, dev] : devices_) {
    for (const auto& f : dev.flows) {
      if (!f.entry.hard_timeout_s) continue;
      const auto deadline = f.installed_at + *f.entry.hard_timeout_s * kSecondMs;
      if (deadline > clock_.now_ms && (!next || deadline < *next)) next = deadline;
    }
  }
  return next;
}

void SimNetwork::inject(const Injection& injection) {
  attachment(injection.src);
  attachment(injection.dst);
  if (!(injection.factor >= 0.0) || injection.end_ms <= injection.start_ms) {
    throw Error(ErrorCode::ValidationError, "injection needs factor >= 0 and a positive window");
  }
  injections_.push_back(injection);
}

double SimNetwork::offered_bps(std::size_t index, TimestampMs tick_start) const {
  const auto& d = profile_.demands[index];
  double rate = d.hourly_mean_bps[static_cast<std::size_t>(hour_of_day(tick_start))];
  if (noise_enabled_ && d.noise_sigma_bps > 0.0) {
    // One independent stream per (seed, demand, tick) keeps the trajectory a
    // pure function of the schedule.
    const auto seed = profile_.rng_seed;
    const auto ts = static_cast<std::uint64_t>(tick_start);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(ts),
                      static_cast<std::uint32_t>(ts >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, d.noise_sigma_bps);
    rate += noise(rng);
  }
  rate = std::max(0.0, rate);
  for (const auto& inj : injections_) {
    if (inj.src == d.src && inj.dst == d.dst && inj.start_ms <= tick_start &&
        tick_start < inj.end_ms) {
      rate *= inj.factor;
    }
  }
  return rate;
}

TickReport SimNetwork::step(DurationMs dt_ms) {
  if (dt_ms <= 0) {
    throw Error(ErrorCode::InvalidDuration, fmt::format("step needs dt > 0, got {}", dt_ms));
  }
  TickReport report;
  report.start_ms = clock_.now_ms;
  report.dt_ms = dt_ms;

  const auto n = profile_.demands.size();
  std::vector<double> offered(n);
  for (std::size_t i = 0; i < n; ++i) offered[i] = offered_bps(i, clock_.now_ms);

  struct Accum {
    std::uint64_t octets = 0;
    std::uint64_t dropped = 0;
  };
  std::map<InterfaceRef, Accum> totals;
  std::vector<std::map<InterfaceRef, std::uint64_t>> hop_totals(n);
  std::vector<std::vector<InterfaceRef>> hop_order(n);
  std::vector<std::string> errors(n);

  expire_flows(true);
  DurationMs remaining = dt_ms;
  while (remaining > 0) {
    DurationMs seg = remaining;
    if (auto deadline = next_flow_deadline()) seg = std::min(seg, *deadline - clock_.now_ms);

    std::vector<std::optional<Path>> paths(n);
    std::map<InterfaceRef, double> arriving;
    std::map<InterfaceRef, double> ingress;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& d = profile_.demands[i];
      ingress[attachment(d.src).at] += offered[i];
      try {
        paths[i] = resolve_path(d.src, d.dst);
        errors[i].clear();
      } catch (const Error& e) {
        errors[i] = e.what();
        continue;
      }
      for (const auto& hop : *paths[i]) arriving[{hop.device, hop.egress}] += offered[i];
    }

    std::map<InterfaceRef, double> carried_rate;
    std::map<InterfaceRef, double> dropped_rate;
    for (std::size_t i = 0; i < n; ++i) {
      if (!paths[i]) continue;
      double rate = offered[i];
      for (const auto& hop : *paths[i]) {
        const InterfaceRef ref{hop.device, hop.egress};
        const double total = arriving[ref];
        const double cap = static_cast<double>(capacity(ref));
        const double scale = total > cap ? cap / total : 1.0;
        const double out = std::min(rate, offered[i] * scale);
        carried_rate[ref] += out;
        dropped_rate[ref] += rate - out;
        rate = out;
        if (!hop_totals[i].contains(ref)) hop_order[i].push_back(ref);
        hop_totals[i][ref] += octets_for(out, seg);
      }
    }

    for (const auto& [ref, rate] : carried_rate) {
      auto& iface = devices_.at(ref.device).interfaces.at(ref.interface);
      const auto cap_octets = octets_for(static_cast<double>(iface.capacity_bps), seg);
      const auto octets = std::min(octets_for(rate, seg), cap_octets);
      const auto dropped = octets_for(dropped_rate[ref], seg);
      wrap_add(iface.counters.out_octets, octets);
      wrap_add(iface.counters.out_pkts, packets_for(octets));
      wrap_add(iface.counters.out_discards, packets_for(dropped));
      if (iface.peer) {
        auto& in = devices_.at(iface.peer->device).interfaces.at(iface.peer->interface);
        wrap_add(in.counters.in_octets, octets);
        wrap_add(in.counters.in_pkts, packets_for(octets));
      }
      totals[ref].octets += octets;
      totals[ref].dropped += dropped;
    }
    for (const auto& [ref, rate] : ingress) {
      auto& iface = devices_.at(ref.device).interfaces.at(ref.interface);
      const auto octets = octets_for(rate, seg);
      wrap_add(iface.counters.in_octets, octets);
      wrap_add(iface.counters.in_pkts, packets_for(octets));
    }

    clock_.now_ms += seg;
    remaining -= seg;
    expire_flows(remaining > 0);
  }

  const double seconds = static_cast<double>(dt_ms) / 1000.0;
  for (const auto& [ref, acc] : totals) {
    if (acc.octets == 0 && acc.dropped == 0) continue;
    report.loads.push_back({ref, acc.octets, acc.dropped,
                            static_cast<double>(acc.octets) * 8.0 / seconds,
                            static_cast<double>(acc.dropped) * 8.0 / seconds});
  }
  for (std::size_t i = 0; i < n; ++i) {
    DemandReport dr;
    dr.src = profile_.demands[i].src;
    dr.dst = profile_.demands[i].dst;
    dr.offered_bps = offered[i];
    for (const auto& ref : hop_order[i]) dr.hop_octets.emplace_back(ref, hop_totals[i][ref]);
    dr.unroutable = !errors[i].empty();
    dr.error = errors[i];
    report.demands.push_back(std::move(dr));
  }
  return report;
}

std::vector<CounterSample> SimNetwork::read_counters(const std::string& device_id) const {
  const auto& dev = state(device_id);
  if (dev.spec.kind != DeviceKind::Traditional) {
    throw Error(ErrorCode::WrongDeviceKind,
                fmt::format("'{}' is an SDN switch; read its flow stats instead", device_id));
  }
  std::vector<CounterSample> out;
  for (const auto& [name, iface] : dev.interfaces) {
    out.push_back({device_id, dev.spec.mgmt_ip, name, iface.counters, clock_.now_ms});
  }
  return out;
}

std::vector<CounterSample> SimNetwork::read_flow_stats() const {
  std::vector<CounterSample> out;
  for (const auto& [id, dev] : devices_) {
    if (dev.spec.kind != DeviceKind::SdnSwitch) continue;
    for (const auto& [name, iface] : dev.interfaces) {
      out.push_back({id, dev.spec.mgmt_ip, name, iface.counters, clock_.now_ms});
    }
  }
  return out;
}

nlohmann::json SimNetwork::save_state() const {
  using nlohmann::json;
  json devices = json::object();
  for (const auto& [id, dev] : devices_) {
    json counters = json::object();
    for (const auto& [name, iface] : dev.interfaces) {
      const auto& c = iface.counters;
      counters[name] = {c.in_octets, c.out_octets, c.in_pkts, c.out_pkts, c.in_discards,
                        c.out_discards};
    }
    json prefs = json::array();
    for (const auto& [key, value] : dev.preferences) {
      prefs.push_back({{"prefix", key.first.str()}, {"egress", key.second}, {"pref", value}});
    }
    json flows = json::array();
    for (const auto& f : dev.flows) {
      json entry = {{"cookie", f.entry.cookie},
                    {"priority", f.entry.priority},
                    {"match", f.entry.match_dst_prefix.str()},
                    {"port", f.entry.action_out_port},
                    {"installed_at", f.installed_at}};
      if (f.entry.hard_timeout_s) entry["hard_timeout_s"] = *f.entry.hard_timeout_s;
      flows.push_back(std::move(entry));
    }
    devices[id] = {{"counters", counters}, {"preferences", prefs}, {"flows", flows}};
  }
  json injections = json::array();
  for (const auto& inj : injections_) {
    injections.push_back({{"src", inj.src.str()},
                          {"dst", inj.dst.str()},
                          {"factor", inj.factor},
                          {"start_ms", inj.start_ms},
                          {"end_ms", inj.end_ms}});
  }
  return {{"now_ms", clock_.now_ms},
          {"acceleration", clock_.acceleration},
          {"noise_enabled", noise_enabled_},
          {"devices", devices},
          {"injections", injections}};
}

void SimNetwork::restore_state(const nlohmann::json& s) {
  clock_.now_ms = s.at("now_ms").get<TimestampMs>();
  clock_.acceleration = s.at("acceleration").get<double>();
  noise_enabled_ = s.at("noise_enabled").get<bool>();
  for (const auto& [id, d] : s.at("devices").items()) {
    auto& dev = state(id);
    for (const auto& [name, c] : d.at("counters").items()) {
      auto& counters = dev.interfaces.at(name).counters;
      for (std::size_t i = 0; i < kAllMetrics.size(); ++i) {
        counters.at(kAllMetrics[i]) = c.at(i).get<std::uint32_t>();
      }
    }
    dev.preferences.clear();
    for (const auto& p : d.at("preferences")) {
      dev.preferences[{Cidr::parse(p.at("prefix").get<std::string>()),
                       p.at("egress").get<std::string>()}] = p.at("pref").get<int>();
    }
    dev.flows.clear();
    for (const auto& f : d.at("flows")) {
      FlowEntry entry{id,
                      f.at("cookie").get<std::uint64_t>(),
                      f.at("priority").get<int>(),
                      Cidr::parse(f.at("match").get<std::string>()),
                      f.at("port").get<std::string>(),
                      std::nullopt};
      if (f.contains("hard_timeout_s")) entry.hard_timeout_s = f["hard_timeout_s"].get<std::int64_t>();
      dev.flows.push_back({std::move(entry), f.at("installed_at").get<TimestampMs>()});
    }
  }
  injections_.clear();
  for (const auto& inj : s.at("injections")) {
    injections_.push_back({Cidr::parse(inj.at("src").get<std::string>()),
                           Cidr::parse(inj.at("dst").get<std::string>()),
                           inj.at("factor").get<double>(), inj.at("start_ms").get<TimestampMs>(),
                           inj.at("end_ms").get<TimestampMs>()});
  }
}

std::map<std::pair<Cidr, Cidr>, std::optional<Path>> routing_function(const SimNetwork& net) {
  std::map<std::pair<Cidr, Cidr>, std::optional<Path>> out;
  for (const auto& [src, _] : net.topology().subnets) {
    for (const auto& [dst, __] : net.topology().subnets) {
      if (src == dst) continue;
      try {
        out[{src, dst}] = net.resolve_path(src, dst);
      } catch (const Error&) {
        out[{src, dst}] = std::nullopt;
      }
    }
  }
  return out;
}

}  // namespace trendnet::netsim
