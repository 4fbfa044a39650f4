// SPDX-License-Identifier: Apache-2.0
//
// Filter -> normalize -> publish. Raw samples are reduced to an allow-listed
// metric set, wrapped in the canonical telemetry envelope and appended to an
// offset-addressed ingest bus.
#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "trendnet/collector.hpp"
#include "trendnet/journal.hpp"

namespace trendnet::pipeline {

struct MetricAllowList {
  std::set<Metric> names{kAllMetrics.begin(), kAllMetrics.end()};

  /// Throws Error(EmptyAllowList) or Error(ValidationError) for unknown names.
  static MetricAllowList from_names(const std::vector<std::string>& names);
  std::vector<std::string> to_names() const;
};

struct FilteredSample {
  std::string src;
  std::string host_ip;
  std::string interface;
  TimestampMs timestamp_ms = 0;
  std::array<std::optional<std::uint64_t>, 6> metrics{};  // indexed like kAllMetrics

  std::optional<std::uint64_t> get(Metric m) const;
  void set(Metric m, std::optional<std::uint64_t> value);

  friend bool operator==(const FilteredSample&, const FilteredSample&) = default;
};

FilteredSample to_filtered(const collector::RawSample& sample);
FilteredSample filter_metrics(const collector::RawSample& sample, const MetricAllowList& allow);
FilteredSample filter_metrics(const FilteredSample& sample, const MetricAllowList& allow);

/// The telemetry envelope, field for field.
struct TelemetryRecord {
  std::string at_timestamp;  // "@timestamp"
  std::string plugin;
  std::string collectd_type = "if_cols";
  std::string type_instance;
  std::uint64_t in_octets = 0;
  std::uint64_t in_pkts = 0;
  std::uint64_t in_discards = 0;
  std::uint64_t out_octets = 0;
  std::uint64_t out_pkts = 0;
  std::uint64_t out_discards = 0;
  std::string version = "1";  // "@version"
  std::string src;
  std::string host_ip;
  std::string rawdata;
  TimestampMs timestamp = 0;

  /// Keys in envelope order.
  nlohmann::ordered_json to_json() const;
  static TelemetryRecord from_json(const nlohmann::json& j);  // throws Error(MalformedSample)

  friend bool operator==(const TelemetryRecord&, const TelemetryRecord&) = default;
};

/// `{"interface" : "...", "inPkts" : n, ...}` with only the retained fields.
std::string render_rawdata(const FilteredSample& sample);

TelemetryRecord encode(const FilteredSample& sample);
/// Retained fields of the original sample; throws Error(MalformedSample) when
/// rawdata disagrees with the envelope.
FilteredSample decode(const TelemetryRecord& record);

/// Append-only, offset-addressed topics. Optionally journaled to a file.
class IngestBus {
 public:
  struct Batch {
    std::vector<TelemetryRecord> records;
    std::uint64_t next_offset = 0;
  };

  IngestBus() = default;
  explicit IngestBus(const std::filesystem::path& journal_path);

  std::uint64_t publish(const std::string& topic, const TelemetryRecord& record);
  Batch consume(const std::string& topic, std::uint64_t from_offset, std::size_t max) const;
  std::uint64_t end_offset(const std::string& topic) const;
  std::vector<std::string> topics() const;

  /// Blocks until `topic` holds a record at `offset`, the bus closes, or the timeout passes.
  bool wait_for(const std::string& topic, std::uint64_t offset,
                std::chrono::milliseconds timeout) const;
  void close();
  bool closed() const;
  std::uint64_t journal_bytes() const;

 private:
  mutable std::shared_mutex mutex_;
  mutable std::condition_variable_any published_;
  std::map<std::string, std::vector<TelemetryRecord>> topics_;
  Journal journal_;
  bool closed_ = false;
};

}  // namespace trendnet::pipeline
