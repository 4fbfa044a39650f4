// SPDX-License-Identifier: Apache-2.0
#include "trendnet/pipeline.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "trendnet/error.hpp"

namespace trendnet::pipeline {

namespace {

std::size_t index_of(Metric m) {
  return static_cast<std::size_t>(std::find(kAllMetrics.begin(), kAllMetrics.end(), m) -
                                  kAllMetrics.begin());
}

// Field order of the rawdata string.
constexpr std::array<Metric, 4> kRawdataMetrics = {Metric::InPkts, Metric::OutPkts,
                                                   Metric::InOctets, Metric::OutOctets};

std::string_view plugin_for(std::string_view src) {
  if (src == collector::kSrcCollectd) return "snmp";
  if (src == collector::kSrcSdn) return "openflow";
  return "";
}

[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorCode::MalformedSample, why); }

}  // namespace

MetricAllowList MetricAllowList::from_names(const std::vector<std::string>& names) {
  if (names.empty()) throw Error(ErrorCode::EmptyAllowList, "metric allow-list is empty");
  MetricAllowList allow;
  allow.names.clear();
  for (const auto& n : names) {
    auto m = metric_from_name(n);
    if (!m) throw Error(ErrorCode::ValidationError, fmt::format("unknown metric '{}'", n));
    allow.names.insert(*m);
  }
  return allow;
}

std::vector<std::string> MetricAllowList::to_names() const {
  std::vector<std::string> out;
  for (auto m : kAllMetrics) {
    if (names.contains(m)) out.emplace_back(metric_name(m));
  }
  return out;
}

std::optional<std::uint64_t> FilteredSample::get(Metric m) const { return metrics[index_of(m)]; }

void FilteredSample::set(Metric m, std::optional<std::uint64_t> value) {
  metrics[index_of(m)] = value;
}

FilteredSample to_filtered(const collector::RawSample& s) {
  FilteredSample out{s.src, s.host_ip, s.interface, s.timestamp_ms, {}};
  for (auto m : kAllMetrics) out.set(m, s.counters.get(m));
  return out;
}

FilteredSample filter_metrics(const FilteredSample& sample, const MetricAllowList& allow) {
  if (allow.names.empty()) throw Error(ErrorCode::EmptyAllowList, "metric allow-list is empty");
  FilteredSample out = sample;
  for (auto m : kAllMetrics) {
    if (!allow.names.contains(m)) out.set(m, std::nullopt);
  }
  return out;
}

FilteredSample filter_metrics(const collector::RawSample& sample, const MetricAllowList& allow) {
  return filter_metrics(to_filtered(sample), allow);
}

std::string render_rawdata(const FilteredSample& s) {
  std::string out = fmt::format("{{\"interface\" : {}", nlohmann::json(s.interface).dump());
  for (auto m : kRawdataMetrics) {
    if (auto v = s.get(m)) out += fmt::format(", \"{}\" : {}", metric_name(m), *v);
  }
  out += "}";
  return out;
}

TelemetryRecord encode(const FilteredSample& s) {
  if (s.host_ip.empty() || s.interface.empty() || plugin_for(s.src).empty()) {
    malformed(fmt::format("sample lacks identity fields (src '{}', host '{}', interface '{}')",
                          s.src, s.host_ip, s.interface));
  }
  TelemetryRecord r;
  r.at_timestamp = iso8601_ms(s.timestamp_ms);
  r.plugin = std::string(plugin_for(s.src));
  r.type_instance = s.interface;
  r.in_octets = s.get(Metric::InOctets).value_or(0);
  r.in_pkts = s.get(Metric::InPkts).value_or(0);
  r.in_discards = s.get(Metric::InDiscards).value_or(0);
  r.out_octets = s.get(Metric::OutOctets).value_or(0);
  r.out_pkts = s.get(Metric::OutPkts).value_or(0);
  r.out_discards = s.get(Metric::OutDiscards).value_or(0);
  r.src = s.src;
  r.host_ip = s.host_ip;
  r.rawdata = render_rawdata(s);
  r.timestamp = s.timestamp_ms;
  return r;
}

FilteredSample decode(const TelemetryRecord& r) {
  if (plugin_for(r.src) != r.plugin) {
    malformed(fmt::format("plugin '{}' does not match src '{}'", r.plugin, r.src));
  }
  if (parse_iso8601_ms(r.at_timestamp) != r.timestamp) {
    malformed(fmt::format("@timestamp {} != timestamp {}", r.at_timestamp, r.timestamp));
  }
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(r.rawdata);
  } catch (const nlohmann::json::exception& e) {
    malformed(fmt::format("rawdata is not JSON: {}", e.what()));
  }
  if (!raw.is_object() || raw.value("interface", std::string{}) != r.type_instance) {
    malformed("rawdata interface does not match type_instance");
  }
  FilteredSample s{r.src, r.host_ip, r.type_instance, r.timestamp, {}};
  const std::map<Metric, std::uint64_t> top = {
      {Metric::InOctets, r.in_octets},   {Metric::OutOctets, r.out_octets},
      {Metric::InPkts, r.in_pkts},       {Metric::OutPkts, r.out_pkts},
      {Metric::InDiscards, r.in_discards}, {Metric::OutDiscards, r.out_discards}};
  for (auto m : kRawdataMetrics) {
    const auto name = std::string(metric_name(m));
    if (!raw.contains(name)) continue;
    const auto v = raw[name].get<std::uint64_t>();
    if (v != top.at(m)) malformed(fmt::format("rawdata {} = {} but envelope has {}", name, v, top.at(m)));
    s.set(m, v);
  }
  s.set(Metric::InDiscards, r.in_discards);
  s.set(Metric::OutDiscards, r.out_discards);
  return s;
}

nlohmann::ordered_json TelemetryRecord::to_json() const {
  nlohmann::ordered_json j;
  j["@timestamp"] = at_timestamp;
  j["plugin"] = plugin;
  j["collectd_type"] = collectd_type;
  j["type_instance"] = type_instance;
  j["inOctets"] = in_octets;
  j["inPkts"] = in_pkts;
  j["inDiscards"] = in_discards;
  j["outOctets"] = out_octets;
  j["outPkts"] = out_pkts;
  j["outDiscards"] = out_discards;
  j["@version"] = version;
  j["src"] = src;
  j["host_ip"] = host_ip;
  j["rawdata"] = rawdata;
  j["timestamp"] = timestamp;
  return j;
}

TelemetryRecord TelemetryRecord::from_json(const nlohmann::json& j) {
  try {
    TelemetryRecord r;
    r.at_timestamp = j.at("@timestamp").get<std::string>();
    r.plugin = j.at("plugin").get<std::string>();
    r.collectd_type = j.at("collectd_type").get<std::string>();
    r.type_instance = j.at("type_instance").get<std::string>();
    r.in_octets = j.at("inOctets").get<std::uint64_t>();
    r.in_pkts = j.at("inPkts").get<std::uint64_t>();
    r.in_discards = j.at("inDiscards").get<std::uint64_t>();
    r.out_octets = j.at("outOctets").get<std::uint64_t>();
    r.out_pkts = j.at("outPkts").get<std::uint64_t>();
    r.out_discards = j.at("outDiscards").get<std::uint64_t>();
    r.version = j.at("@version").get<std::string>();
    r.src = j.at("src").get<std::string>();
    r.host_ip = j.at("host_ip").get<std::string>();
    r.rawdata = j.at("rawdata").get<std::string>();
    r.timestamp = j.at("timestamp").get<TimestampMs>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    malformed(fmt::format("envelope: {}", e.what()));
  }
}

IngestBus::IngestBus(const std::filesystem::path& journal_path) {
  journal_ = Journal::open(journal_path, [this](std::string_view line) {
    auto j = nlohmann::json::parse(line);
    topics_[j.at("topic").get<std::string>()].push_back(TelemetryRecord::from_json(j.at("record")));
    return true;
  });
}

std::uint64_t IngestBus::journal_bytes() const {
  std::shared_lock lock(mutex_);
  return journal_.size_bytes();
}

std::uint64_t IngestBus::publish(const std::string& topic, const TelemetryRecord& record) {
  if (topic.empty()) throw Error(ErrorCode::ValidationError, "topic name is empty");
  std::uint64_t offset = 0;
  {
    std::unique_lock lock(mutex_);
    if (closed_) throw Error(ErrorCode::BusClosed, fmt::format("publish to '{}' after close", topic));
    if (journal_.is_open()) {
      nlohmann::ordered_json line;
      line["topic"] = topic;
      line["record"] = record.to_json();
      journal_.append(line.dump());
    }
    auto& log = topics_[topic];
    offset = log.size();
    log.push_back(record);
  }
  published_.notify_all();
  return offset;
}

IngestBus::Batch IngestBus::consume(const std::string& topic, std::uint64_t from_offset,
                                    std::size_t max) const {
  std::shared_lock lock(mutex_);
  auto it = topics_.find(topic);
  if (it == topics_.end()) throw Error(ErrorCode::UnknownTopic, fmt::format("no topic '{}'", topic));
  const auto& log = it->second;
  Batch batch;
  const auto begin = std::min<std::uint64_t>(from_offset, log.size());
  const auto end = std::min<std::uint64_t>(log.size(), begin + max);
  batch.records.assign(log.begin() + static_cast<std::ptrdiff_t>(begin),
                       log.begin() + static_cast<std::ptrdiff_t>(end));
  batch.next_offset = from_offset + batch.records.size();
  return batch;
}

std::uint64_t IngestBus::end_offset(const std::string& topic) const {
  std::shared_lock lock(mutex_);
  auto it = topics_.find(topic);
  return it == topics_.end() ? 0 : it->second.size();
}

std::vector<std::string> IngestBus::topics() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : topics_) out.push_back(name);
  return out;
}

bool IngestBus::wait_for(const std::string& topic, std::uint64_t offset,
                         std::chrono::milliseconds timeout) const {
  std::shared_lock lock(mutex_);
  return published_.wait_for(lock, timeout, [&] {
    if (closed_) return true;
    auto it = topics_.find(topic);
    return it != topics_.end() && it->second.size() > offset;
  });
}

void IngestBus::close() {
  {
    std::unique_lock lock(mutex_);
    closed_ = true;
  }
  published_.notify_all();
}

bool IngestBus::closed() const {
  std::shared_lock lock(mutex_);
  return closed_;
}

}  // namespace trendnet::pipeline
