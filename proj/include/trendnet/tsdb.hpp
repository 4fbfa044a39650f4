// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <compare>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "trendnet/journal.hpp"
#include "trendnet/pipeline.hpp"

namespace trendnet::tsdb {

struct SeriesKey {
  std::string metric;
  std::string host_ip;
  std::string interface;
  std::string src;

  friend auto operator<=>(const SeriesKey&, const SeriesKey&) = default;
};

struct DataPoint {
  TimestampMs ts_ms = 0;
  double value = 0.0;

  friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

/// Where the ingest bridge appends.
class PointWriter {
 public:
  virtual ~PointWriter() = default;
  virtual void append(const SeriesKey& key, const DataPoint& point) = 0;
};

/// In-memory ordered series, optionally journaled one point per line as
/// "metric host_ip interface src ts_ms value".
class TimeSeriesStore : public PointWriter {
 public:
  TimeSeriesStore() = default;
  explicit TimeSeriesStore(const std::filesystem::path& journal_path);

  /// Same (key, ts) replaces the value. Throws Error(NonFiniteValue).
  void append(const SeriesKey& key, const DataPoint& point) override;

  /// Points with t0 <= ts < t1, ascending. Unknown series -> empty.
  std::vector<DataPoint> query(const SeriesKey& key, TimestampMs t0, TimestampMs t1) const;

  std::vector<SeriesKey> keys() const;
  std::size_t size() const;
  std::uint64_t journal_bytes() const;
  void truncate_journal(std::uint64_t bytes);

 private:
  mutable std::shared_mutex mutex_;
  std::map<SeriesKey, std::map<TimestampMs, double>> series_;
  Journal journal_;
};

std::string format_journal_line(const SeriesKey& key, const DataPoint& point);
/// Throws Error(ParseError) on malformed lines.
std::pair<SeriesKey, DataPoint> parse_journal_line(std::string_view line);

enum class AggregateFn { Mean, Max, Sum };
AggregateFn aggregate_fn_from_string(std::string_view text);  // throws Error(ValidationError)

/// Buckets by floor(ts / bucket) * bucket, reduces each, omits empty buckets.
std::vector<DataPoint> aggregate(std::span<const DataPoint> points, DurationMs bucket_ms,
                                 AggregateFn fn);

/// One data point per counter metric carried by the record.
std::vector<std::pair<SeriesKey, DataPoint>> explode(const pipeline::TelemetryRecord& record);

/// Drains bus topics into a point writer. Offsets advance only after every
/// point of a batch has been appended.
class IngestBridge {
 public:
  static constexpr std::size_t kDefaultBatch = 256;

  IngestBridge(pipeline::IngestBus& bus, PointWriter& writer, std::vector<std::string> topics,
               std::size_t batch_size = kDefaultBatch);
  ~IngestBridge();
  IngestBridge(const IngestBridge&) = delete;
  IngestBridge& operator=(const IngestBridge&) = delete;

  /// Consumes everything currently published. Returns points appended; on a
  /// writer failure the failing batch is left uncommitted.
  std::size_t run_once();

  /// Background task that drains as records arrive.
  void start(std::chrono::milliseconds idle_wait = std::chrono::milliseconds(50));
  void stop();

  std::map<std::string, std::uint64_t> offsets() const;
  void set_offsets(const std::map<std::string, std::uint64_t>& offsets);
  std::optional<std::string> last_error() const;

 private:
  pipeline::IngestBus& bus_;
  PointWriter& writer_;
  std::vector<std::string> topics_;
  std::size_t batch_size_;
  mutable std::mutex mutex_;
  std::map<std::string, std::uint64_t> offsets_;
  std::optional<std::string> last_error_;
  std::atomic<bool> running_{false};
  std::thread worker_;
};

}  // namespace trendnet::tsdb
