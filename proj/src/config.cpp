// SPDX-License-Identifier: Apache-2.0
#include "trendnet/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "trendnet/error.hpp"
#include "trendnet/scenario.hpp"

namespace trendnet::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string type_name(const json& j) { return j.type_name(); }

/// Reads one JSON object, recording type errors and unknown keys under a
/// dotted path.
class Section {
 public:
  Section(const json* node, std::string path, std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (node_ && !node_->is_object()) {
      errors_.push_back(fmt::format("{}: expected object, got {}", path_, type_name(*node_)));
      node_ = nullptr;
    }
  }

  ~Section() {
    if (!node_) return;
    for (const auto& [k, _] : node_->items()) {
      if (!seen_.contains(k)) errors_.push_back(fmt::format("{}: unknown key", name(k)));
    }
  }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (!node_) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  Section child(const std::string& key) { return Section(raw(key), name(key), errors_); }

  bool has(const std::string& key) const { return node_ && node_->contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = raw(key);
    if (!v) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) return type_error(key, "boolean", *v);
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) return type_error(key, "integer", *v);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) return type_error(key, "number", *v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v->is_string()) return type_error(key, "string", *v);
    }
    out = v->get<T>();
  }

  /// Integer milliseconds or a duration string such as "1h".
  void get_duration(const std::string& key, DurationMs& out) {
    const json* v = raw(key);
    if (!v) return;
    if (v->is_number_integer()) {
      out = v->get<DurationMs>();
    } else if (v->is_string()) {
      try {
        out = parse_duration(v->get<std::string>());
      } catch (const Error& e) {
        errors_.push_back(fmt::format("{}: {}", name(key), e.message()));
      }
    } else {
      type_error(key, "duration", *v);
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void error(const std::string& key, const std::string& msg) {
    errors_.push_back(fmt::format("{}: {}", name(key), msg));
  }
  const json* node() const { return node_; }

 private:
  void type_error(const std::string& key, const char* want, const json& got) {
    errors_.push_back(fmt::format("{}: expected {}, got {}", name(key), want, type_name(got)));
  }

  const json* node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

std::optional<Cidr> parse_prefix(Section& s, const std::string& key) {
  std::string text;
  s.get(key, text);
  if (text.empty()) {
    s.error(key, "required CIDR");
    return std::nullopt;
  }
  try {
    return Cidr::parse(text);
  } catch (const Error& e) {
    s.error(key, e.message());
    return std::nullopt;
  }
}

netsim::InterfaceRef parse_ref(Section& s, const std::string& key) {
  auto c = s.child(key);
  netsim::InterfaceRef r;
  c.get("device", r.device);
  c.get("interface", r.interface);
  if (r.device.empty() || r.interface.empty()) s.error(key, "needs device and interface");
  return r;
}

template <typename F>
void for_each_item(Section& s, const std::string& key, std::vector<std::string>& errors, F&& fn) {
  const json* arr = s.raw(key);
  if (!arr) return;
  if (!arr->is_array()) {
    errors.push_back(fmt::format("{}: expected array, got {}", s.name(key), type_name(*arr)));
    return;
  }
  for (std::size_t i = 0; i < arr->size(); ++i) {
    Section item(&(*arr)[i], fmt::format("{}[{}]", s.name(key), i), errors);
    fn(item);
  }
}

void read_topology(Section& root, SystemConfig& cfg, std::vector<std::string>& errors) {
  if (!root.has("topology")) {
    root.raw("topology");
    return;
  }
  auto t = root.child("topology");
  netsim::TopologySpec spec;
  for_each_item(t, "devices", errors, [&](Section& d) {
    netsim::DeviceSpec dev;
    std::string kind = "traditional";
    d.get("id", dev.id);
    d.get("kind", kind);
    d.get("mgmt_ip", dev.mgmt_ip);
    try {
      dev.kind = netsim::device_kind_from_string(kind);
    } catch (const Error& e) {
      d.error("kind", e.message());
    }
    if (dev.id.empty()) d.error("id", "required");
    spec.devices.push_back(dev);
  });
  for_each_item(t, "links", errors, [&](Section& l) {
    netsim::LinkSpec link;
    link.a = parse_ref(l, "a");
    link.b = parse_ref(l, "b");
    l.get("capacity_bps", link.capacity_bps);
    spec.links.push_back(link);
  });
  for_each_item(t, "subnets", errors, [&](Section& s) {
    auto prefix = parse_prefix(s, "prefix");
    netsim::SubnetAttachment at;
    s.get("device", at.at.device);
    s.get("interface", at.at.interface);
    s.get("capacity_bps", at.capacity_bps);
    if (prefix) spec.subnets[*prefix] = at;
  });
  cfg.topology = std::move(spec);
  cfg.traffic.demands.clear();
}

void read_traffic(Section& root, SystemConfig& cfg, std::vector<std::string>& errors) {
  auto t = root.child("traffic");
  t.get("seed", cfg.traffic.rng_seed);
  t.get("noise_enabled", cfg.noise_enabled);
  if (!t.has("demands")) {
    t.raw("demands");
    return;
  }
  cfg.traffic.demands.clear();
  for_each_item(t, "demands", errors, [&](Section& d) {
    netsim::Demand demand;
    auto src = parse_prefix(d, "src");
    auto dst = parse_prefix(d, "dst");
    const json* hourly = d.raw("hourly_mean_bps");
    if (!hourly) {
      d.error("hourly_mean_bps", "required (number or 24 numbers)");
    } else if (hourly->is_number()) {
      demand.hourly_mean_bps.fill(hourly->get<double>());
    } else if (hourly->is_array() && hourly->size() == 24 &&
               std::all_of(hourly->begin(), hourly->end(), [](const json& x) { return x.is_number(); })) {
      for (int h = 0; h < 24; ++h) demand.hourly_mean_bps[h] = (*hourly)[h].get<double>();
    } else {
      d.error("hourly_mean_bps", "expected a number or an array of 24 numbers");
    }
    d.get("noise_sigma_bps", demand.noise_sigma_bps);
    for (double v : demand.hourly_mean_bps) {
      if (!(v >= 0.0)) {
        d.error("hourly_mean_bps", "values must be non-negative");
        break;
      }
    }
    if (!(demand.noise_sigma_bps >= 0.0)) d.error("noise_sigma_bps", "must be non-negative");
    if (src && dst) {
      demand.src = *src;
      demand.dst = *dst;
      cfg.traffic.demands.push_back(demand);
    }
  });
}

void read_analytics(Section& root, analytics::AnalyticsConfig& a) {
  auto s = root.child("analytics");
  s.get("threshold_fraction", a.threshold_fraction);
  s.get("deviation_multiplier", a.deviation_multiplier);
  s.get("confirm_window", a.confirm_window);
  s.get_duration("sample_period_ms", a.sample_period_ms);
  s.get("benchmark_days", a.benchmark_days);
  s.get_duration("benchmark_reset_period_ms", a.benchmark_reset_period_ms);
  s.get("sigma_floor", a.sigma_floor);
}

void read_actioner(Section& root, actioner::ActionerConfig& a) {
  auto s = root.child("actioner");
  s.get("lp_low", a.lp_low);
  s.get("lp_high", a.lp_high);
  s.get("priority", a.flow_priority);
  s.get("duration_periods", a.duration_periods);
  s.get("timeout_mode", a.timeout_mode);
  std::string policy(to_string(a.policy));
  s.get("policy", policy);
  try {
    a.policy = actioner::policy_from_string(policy);
  } catch (const Error& e) {
    s.error("policy", e.message());
  }
}

std::vector<std::string> validate(const SystemConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.collector.period_ms <= 0) out.push_back("collector.period_ms: must be positive");
  if (cfg.collector.jitter_ms < 0) out.push_back("collector.jitter_ms: must be non-negative");
  if (cfg.collector.jitter_ms >= cfg.collector.period_ms && cfg.collector.period_ms > 0) {
    out.push_back("collector.jitter_ms: must be shorter than the period");
  }
  for (auto& v : cfg.analytics.violations()) out.push_back(std::move(v));
  if (cfg.analytics.sample_period_ms != cfg.collector.period_ms) {
    out.push_back(fmt::format("analytics.sample_period_ms: must equal collector.period_ms ({} != {})",
                              cfg.analytics.sample_period_ms, cfg.collector.period_ms));
  }
  for (auto& v : cfg.actioner.violations()) out.push_back(std::move(v));
  if (cfg.topic.empty()) out.push_back("pipeline.topic: must be non-empty");
  if (!cfg.allow.names.contains(Metric::OutOctets)) {
    out.push_back("pipeline.allow: must include outOctets, utilization is derived from it");
  }
  if (cfg.port < 0 || cfg.port > 65535) out.push_back(fmt::format("server.port: {} out of range", cfg.port));
  if (cfg.data_dir.empty()) out.push_back("server.data_dir: must be non-empty");
  if (!(cfg.acceleration >= 0.0)) out.push_back("sim.acceleration: must be non-negative");
  try {
    (void)netsim::SimNetwork::build(cfg.topology, cfg.traffic);
  } catch (const Error& e) {
    out.push_back(fmt::format("topology: {}", e.what()));
  }
  return out;
}

}  // namespace

SystemConfig SystemConfig::defaults() {
  SystemConfig cfg;
  cfg.topology = scenario::demo_topology();
  cfg.traffic = scenario::demo_profile(1);
  return cfg;
}

SystemConfig config_from_json(const json& doc) {
  std::vector<std::string> errors;
  auto cfg = SystemConfig::defaults();
  {
    Section root(&doc, "", errors);
    read_topology(root, cfg, errors);
    read_traffic(root, cfg, errors);
    {
      auto c = root.child("collector");
      c.get_duration("period_ms", cfg.collector.period_ms);
      c.get_duration("jitter_ms", cfg.collector.jitter_ms);
    }
    {
      auto p = root.child("pipeline");
      p.get("topic", cfg.topic);
      if (const json* allow = p.raw("allow")) {
        try {
          cfg.allow = pipeline::MetricAllowList::from_names(allow->get<std::vector<std::string>>());
        } catch (const Error& e) {
          p.error("allow", e.message());
        } catch (const json::exception&) {
          p.error("allow", "expected an array of metric names");
        }
      }
    }
    // The sample period follows the collector unless set explicitly.
    const bool explicit_sample_period =
        root.node() && root.node()->contains("analytics") && (*root.node())["analytics"].is_object() &&
        (*root.node())["analytics"].contains("sample_period_ms");
    read_analytics(root, cfg.analytics);
    if (!explicit_sample_period) cfg.analytics.sample_period_ms = cfg.collector.period_ms;
    read_actioner(root, cfg.actioner);
    cfg.actioner.sample_period_ms = cfg.analytics.sample_period_ms;
    {
      auto s = root.child("server");
      s.get("port", cfg.port);
      s.get("data_dir", cfg.data_dir);
    }
    {
      auto s = root.child("sim");
      s.get("epoch_ms", cfg.epoch_ms);
      s.get("acceleration", cfg.acceleration);
    }
  }
  if (errors.empty()) errors = validate(cfg);
  else {
    for (auto& v : validate(cfg)) errors.push_back(std::move(v));
  }
  if (!errors.empty()) {
    throw Error(ErrorCode::ValidationError,
                fmt::format("{} configuration error{}", errors.size(), errors.size() == 1 ? "" : "s"),
                errors);
  }
  return cfg;
}

ordered_json config_to_json(const SystemConfig& cfg) {
  ordered_json topo;
  topo["devices"] = ordered_json::array();
  for (const auto& d : cfg.topology.devices) {
    topo["devices"].push_back({{"id", d.id}, {"kind", netsim::to_string(d.kind)}, {"mgmt_ip", d.mgmt_ip}});
  }
  topo["links"] = ordered_json::array();
  for (const auto& l : cfg.topology.links) {
    topo["links"].push_back({{"a", {{"device", l.a.device}, {"interface", l.a.interface}}},
                             {"b", {{"device", l.b.device}, {"interface", l.b.interface}}},
                             {"capacity_bps", l.capacity_bps}});
  }
  topo["subnets"] = ordered_json::array();
  for (const auto& [prefix, at] : cfg.topology.subnets) {
    topo["subnets"].push_back({{"prefix", prefix.str()},
                               {"device", at.at.device},
                               {"interface", at.at.interface},
                               {"capacity_bps", at.capacity_bps}});
  }
  ordered_json demands = ordered_json::array();
  for (const auto& d : cfg.traffic.demands) {
    demands.push_back({{"src", d.src.str()},
                       {"dst", d.dst.str()},
                       {"hourly_mean_bps", d.hourly_mean_bps},
                       {"noise_sigma_bps", d.noise_sigma_bps}});
  }
  ordered_json j;
  j["topology"] = std::move(topo);
  j["traffic"] = {{"seed", cfg.traffic.rng_seed}, {"noise_enabled", cfg.noise_enabled}, {"demands", demands}};
  j["collector"] = {{"period_ms", cfg.collector.period_ms}, {"jitter_ms", cfg.collector.jitter_ms}};
  j["pipeline"] = {{"allow", cfg.allow.to_names()}, {"topic", cfg.topic}};
  const auto& a = cfg.analytics;
  j["analytics"] = {{"threshold_fraction", a.threshold_fraction},
                    {"deviation_multiplier", a.deviation_multiplier},
                    {"confirm_window", a.confirm_window},
                    {"sample_period_ms", a.sample_period_ms},
                    {"benchmark_days", a.benchmark_days},
                    {"benchmark_reset_period_ms", a.benchmark_reset_period_ms},
                    {"sigma_floor", a.sigma_floor}};
  const auto& x = cfg.actioner;
  j["actioner"] = {{"lp_low", x.lp_low},
                   {"lp_high", x.lp_high},
                   {"priority", x.flow_priority},
                   {"duration_periods", x.duration_periods},
                   {"policy", to_string(x.policy)},
                   {"timeout_mode", x.timeout_mode}};
  j["server"] = {{"port", cfg.port}, {"data_dir", cfg.data_dir}};
  j["sim"] = {{"epoch_ms", cfg.epoch_ms}, {"acceleration", cfg.acceleration}};
  return j;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();
  json doc;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    doc = json::object();
  } else {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return config_from_json(doc);
}

SystemConfig patch_runtime_config(const SystemConfig& current, const json& patch) {
  if (!patch.is_object()) throw Error(ErrorCode::ValidationError, "config patch must be an object");
  std::vector<std::string> errors;
  for (const auto& [section, body] : patch.items()) {
    if (section == "analytics" || section == "actioner") {
      if (body.is_object() && section == "analytics" && body.contains("sample_period_ms")) {
        errors.push_back("analytics.sample_period_ms: cannot change while running");
      }
      continue;
    }
    if (section == "traffic" && body.is_object()) {
      for (const auto& [k, _] : body.items()) {
        if (k != "noise_enabled") errors.push_back(fmt::format("traffic.{}: cannot change while running", k));
      }
      continue;
    }
    errors.push_back(fmt::format("{}: cannot change while running", section));
  }
  if (!errors.empty()) {
    throw Error(ErrorCode::ValidationError, "config patch touches structural fields", errors);
  }
  json merged = config_to_json(current);
  merged.merge_patch(patch);
  return config_from_json(merged);
}

void apply_env_overrides(SystemConfig& cfg) {
  if (const char* port = std::getenv("TRENDNET_PORT"); port && *port) {
    try {
      std::size_t used = 0;
      int p = std::stoi(port, &used);
      if (used != std::string_view(port).size() || p < 0 || p > 65535) throw std::invalid_argument(port);
      cfg.port = p;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ValidationError, fmt::format("TRENDNET_PORT '{}' is not a port", port));
    }
  }
}

}  // namespace trendnet::service
