// SPDX-License-Identifier: Apache-2.0
#include "trendnet/tsdb.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "trendnet/error.hpp"

namespace trendnet::tsdb {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string format_journal_line(const SeriesKey& key, const DataPoint& point) {
  return fmt::format("{} {} {} {} {} {}", key.metric, key.host_ip, key.interface, key.src,
                     point.ts_ms, shortest(point.value));
}

std::pair<SeriesKey, DataPoint> parse_journal_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    auto sp = line.find(' ', pos);
    if (sp == std::string_view::npos) sp = line.size();
    fields.push_back(line.substr(pos, sp - pos));
    pos = sp + 1;
  }
  auto bad = [&] { return Error(ErrorCode::ParseError, fmt::format("bad journal line '{}'", line)); };
  if (fields.size() != 6) throw bad();
  for (const auto& f : fields) {
    if (f.empty()) throw bad();
  }
  DataPoint p;
  auto ts = fields[4];
  if (auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), p.ts_ms);
      ec != std::errc{} || ptr != ts.data() + ts.size()) {
    throw bad();
  }
  auto v = fields[5];
  if (auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), p.value);
      ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(p.value)) {
    throw bad();
  }
  return {SeriesKey{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                    std::string(fields[3])},
          p};
}

TimeSeriesStore::TimeSeriesStore(const std::filesystem::path& journal_path) {
  journal_ = Journal::open(journal_path, [this](std::string_view line) {
    auto [key, point] = parse_journal_line(line);
    series_[key][point.ts_ms] = point.value;
    return true;
  });
}

void TimeSeriesStore::append(const SeriesKey& key, const DataPoint& point) {
  if (!std::isfinite(point.value)) {
    throw Error(ErrorCode::NonFiniteValue,
                fmt::format("{} at {} is not finite", key.metric, point.ts_ms));
  }
  std::unique_lock lock(mutex_);
  auto& series = series_[key];
  auto it = series.find(point.ts_ms);
  if (it != series.end() && it->second == point.value) return;
  if (journal_.is_open()) journal_.append(format_journal_line(key, point));
  series[point.ts_ms] = point.value;
}

std::vector<DataPoint> TimeSeriesStore::query(const SeriesKey& key, TimestampMs t0,
                                              TimestampMs t1) const {
  if (t0 > t1) throw Error(ErrorCode::InvalidRange, fmt::format("query [{}, {})", t0, t1));
  std::shared_lock lock(mutex_);
  std::vector<DataPoint> out;
  auto it = series_.find(key);
  if (it == series_.end()) return out;
  for (auto p = it->second.lower_bound(t0); p != it->second.end() && p->first < t1; ++p) {
    out.push_back({p->first, p->second});
  }
  return out;
}

std::vector<SeriesKey> TimeSeriesStore::keys() const {
  std::shared_lock lock(mutex_);
  std::vector<SeriesKey> out;
  for (const auto& [k, _] : series_) out.push_back(k);
  return out;
}

std::size_t TimeSeriesStore::size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, s] : series_) n += s.size();
  return n;
}

std::uint64_t TimeSeriesStore::journal_bytes() const {
  std::shared_lock lock(mutex_);
  return journal_.size_bytes();
}

void TimeSeriesStore::truncate_journal(std::uint64_t bytes) {
  std::unique_lock lock(mutex_);
  if (!journal_.is_open() || bytes >= journal_.size_bytes()) return;
  journal_.truncate(bytes);
  // Rebuild from what remains on disk.
  series_.clear();
  const auto path = journal_.path();
  journal_ = Journal{};
  journal_ = Journal::open(path, [this](std::string_view line) {
    auto [key, point] = parse_journal_line(line);
    series_[key][point.ts_ms] = point.value;
    return true;
  });
}

AggregateFn aggregate_fn_from_string(std::string_view text) {
  if (text == "mean") return AggregateFn::Mean;
  if (text == "max") return AggregateFn::Max;
  if (text == "sum") return AggregateFn::Sum;
  throw Error(ErrorCode::ValidationError, fmt::format("unknown aggregate '{}'", text));
}

std::vector<DataPoint> aggregate(std::span<const DataPoint> points, DurationMs bucket_ms,
                                 AggregateFn fn) {
  if (bucket_ms <= 0) {
    throw Error(ErrorCode::InvalidDuration, fmt::format("bucket must be positive, got {}", bucket_ms));
  }
  struct Acc {
    double sum = 0.0;
    double max = 0.0;
    std::size_t n = 0;
  };
  std::map<TimestampMs, Acc> buckets;
  for (const auto& p : points) {
    auto& acc = buckets[floor_to(p.ts_ms, bucket_ms)];
    acc.max = acc.n == 0 ? p.value : std::max(acc.max, p.value);
    acc.sum += p.value;
    ++acc.n;
  }
  std::vector<DataPoint> out;
  for (const auto& [ts, acc] : buckets) {
    double v = 0.0;
    switch (fn) {
      case AggregateFn::Mean: v = acc.sum / static_cast<double>(acc.n); break;
      case AggregateFn::Max: v = acc.max; break;
      case AggregateFn::Sum: v = acc.sum; break;
    }
    out.push_back({ts, v});
  }
  return out;
}

std::vector<std::pair<SeriesKey, DataPoint>> explode(const pipeline::TelemetryRecord& record) {
  const auto sample = pipeline::decode(record);
  std::vector<std::pair<SeriesKey, DataPoint>> out;
  for (auto m : kAllMetrics) {
    auto v = sample.get(m);
    if (!v) continue;
    out.push_back({SeriesKey{std::string(metric_name(m)), sample.host_ip, sample.interface, sample.src},
                   DataPoint{sample.timestamp_ms, static_cast<double>(*v)}});
  }
  return out;
}

IngestBridge::IngestBridge(pipeline::IngestBus& bus, PointWriter& writer,
                           std::vector<std::string> topics, std::size_t batch_size)
    : bus_(bus), writer_(writer), topics_(std::move(topics)), batch_size_(batch_size) {
  if (batch_size_ == 0) throw Error(ErrorCode::ValidationError, "batch size must be positive");
  for (const auto& t : topics_) offsets_[t] = 0;
}

IngestBridge::~IngestBridge() { stop(); }

std::size_t IngestBridge::run_once() {
  std::lock_guard lock(mutex_);
  std::size_t appended = 0;
  for (const auto& topic : topics_) {
    while (true) {
      pipeline::IngestBus::Batch batch;
      try {
        batch = bus_.consume(topic, offsets_[topic], batch_size_);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::UnknownTopic) break;  // not created yet
        throw;
      }
      if (batch.records.empty()) break;
      try {
        for (const auto& record : batch.records) {
          for (const auto& [key, point] : explode(record)) {
            writer_.append(key, point);
            ++appended;
          }
        }
      } catch (const std::exception& e) {
        last_error_ = e.what();
        spdlog::error("ingest bridge paused on topic {} at offset {}: {}", topic, offsets_[topic],
                      e.what());
        break;
      }
      offsets_[topic] = batch.next_offset;
      last_error_.reset();
    }
  }
  return appended;
}

void IngestBridge::start(std::chrono::milliseconds idle_wait) {
  if (running_.exchange(true)) return;
  worker_ = std::thread([this, idle_wait] {
    while (running_) {
      run_once();
      const auto topic = topics_.empty() ? std::string{} : topics_.front();
      const auto offset = offsets().count(topic) ? offsets().at(topic) : 0;
      if (!topic.empty()) bus_.wait_for(topic, offset, idle_wait);
      else std::this_thread::sleep_for(idle_wait);
    }
  });
}

void IngestBridge::stop() {
  if (!running_.exchange(false)) return;
  if (worker_.joinable()) worker_.join();
}

std::map<std::string, std::uint64_t> IngestBridge::offsets() const {
  std::lock_guard lock(mutex_);
  return offsets_;
}

void IngestBridge::set_offsets(const std::map<std::string, std::uint64_t>& offsets) {
  std::lock_guard lock(mutex_);
  for (const auto& [t, o] : offsets) offsets_[t] = o;
}

std::optional<std::string> IngestBridge::last_error() const {
  std::lock_guard lock(mutex_);
  return last_error_;
}

}  // namespace trendnet::tsdb
