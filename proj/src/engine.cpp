// SPDX-License-Identifier: Apache-2.0
#include "trendnet/engine.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "trendnet/error.hpp"

namespace trendnet::service {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigFile = "config.json";
constexpr const char* kStateFile = "state.json";
constexpr const char* kPointsJournal = "points.journal";
constexpr const char* kBusJournal = "bus.jsonl";
constexpr const char* kDecisionsJournal = "decisions.jsonl";
constexpr const char* kTrendsJournal = "trends.jsonl";
constexpr const char* kBenchmarksJournal = "benchmarks.jsonl";
constexpr const char* kEventsJournal = "events.jsonl";
constexpr std::array kJournals{kPointsJournal,  kBusJournal,        kDecisionsJournal,
                               kTrendsJournal, kBenchmarksJournal, kEventsJournal};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json ref_json(const netsim::InterfaceRef& r) { return json{{"device", r.device}, {"interface", r.interface}}; }

SystemConfig resolve_config(const Engine::Options& o) {
  if (!o.data_dir) return o.config;
  const auto path = *o.data_dir / kConfigFile;
  if (!fs::exists(path)) return o.config;
  auto cfg = load_config(path);
  cfg.port = o.config.port;
  cfg.data_dir = o.config.data_dir;
  spdlog::info("using {} from the data directory", path.string());
  return cfg;
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::Sample: return "sample";
    case EventKind::Benchmark: return "benchmark";
    case EventKind::Trend: return "trend";
    case EventKind::Decision: return "decision";
  }
  return "?";
}

ordered_json EventEnvelope::to_json() const {
  ordered_json j;
  j["seq"] = seq;
  j["kind"] = to_string(kind);
  j["ts"] = ts_ms;
  j["payload"] = payload;
  return j;
}

EventEnvelope EventEnvelope::from_json(const json& j) {
  EventEnvelope e;
  e.seq = j.at("seq").get<std::uint64_t>();
  const auto kind = j.at("kind").get<std::string>();
  bool known = false;
  for (auto k : {EventKind::Sample, EventKind::Benchmark, EventKind::Trend, EventKind::Decision}) {
    if (to_string(k) == kind) {
      e.kind = k;
      known = true;
    }
  }
  if (!known) throw Error(ErrorCode::ParseError, fmt::format("unknown event kind '{}'", kind));
  e.ts_ms = j.at("ts").get<TimestampMs>();
  e.payload = j.at("payload");
  return e;
}

class Engine::Sink : public collector::SampleSink {
 public:
  explicit Sink(Engine& engine) : engine_(engine) {}

  void deliver(const collector::RawSample& sample) override {
    engine_.bus_->publish(engine_.cfg_.topic,
                          pipeline::encode(pipeline::filter_metrics(sample, engine_.cfg_.allow)));
  }

  void round_complete(TimestampMs ts) override { engine_.on_round(ts); }

 private:
  Engine& engine_;
};

Engine::Engine(Options options)
    : cfg_(resolve_config(options)),
      data_dir_(options.data_dir),
      require_approval_(options.require_approval),
      net_(netsim::SimNetwork::build(cfg_.topology, cfg_.traffic,
                                     netsim::VirtualClock{cfg_.epoch_ms, cfg_.acceleration})) {
  file_policy_ = cfg_.actioner.policy;
  if (require_approval_) cfg_.actioner.policy = actioner::Policy::Manual;
  net_.set_noise_enabled(cfg_.noise_enabled);

  // Monitored links: link egresses on the baseline path of every demand.
  std::set<netsim::InterfaceRef> seen;
  for (const auto& d : net_.profile().demands) {
    netsim::Path path;
    try {
      path = net_.resolve_path(d.src, d.dst);
    } catch (const Error& e) {
      spdlog::warn("demand {} -> {} has no path: {}", d.src.str(), d.dst.str(), e.what());
      continue;
    }
    for (const auto& hop : path) {
      netsim::InterfaceRef ref{hop.device, hop.egress};
      if (!net_.is_link_interface(ref) || !seen.insert(ref).second) continue;
      const auto& dev = net_.device(hop.device);
      monitored_.push_back({analytics::LinkRef{dev.mgmt_ip, hop.egress, src_of(hop.device)}, ref,
                            net_.capacity(ref)});
    }
  }
  std::sort(monitored_.begin(), monitored_.end(),
            [](const auto& a, const auto& b) { return a.link < b.link; });

  std::optional<json> state;
  if (data_dir_) {
    std::error_code ec;
    fs::create_directories(*data_dir_, ec);
    if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot create {}: {}", data_dir_->string(), ec.message()));
    if (!fs::exists(file(kConfigFile))) write_config_locked();
    if (fs::exists(file(kStateFile))) {
      try {
        state = json::parse(read_file(file(kStateFile)));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, fmt::format("{}: {}", file(kStateFile).string(), e.what()));
      }
      // Journals may run ahead of the last checkpoint; cut them back to it.
      for (const char* name : kJournals) {
        const auto path = file(name);
        const auto recorded = state->at("journals").value(name, std::uint64_t{0});
        if (fs::exists(path) && fs::file_size(path) > recorded) {
          spdlog::warn("{}: dropping {} bytes past the last checkpoint", path.string(),
                       fs::file_size(path) - recorded);
          fs::resize_file(path, recorded);
        }
      }
    } else {
      for (const char* name : kJournals) fs::remove(file(name));
    }
  }

  scheduler_ = std::make_unique<VirtualScheduler>(
      [this](DurationMs dt) {
        auto report = net_.step(dt);
        for (const auto& d : report.demands) {
          for (const auto& [iface, octets] : d.hop_octets) share_[iface][d.dst] += octets;
        }
      },
      [this] { return net_.clock().now_ms; }, cfg_.collector.period_ms);

  std::vector<actioner::LoadBalanceDecision> decisions;
  open_storage();
  if (data_dir_) {
    std::map<std::string, std::size_t> index;
    decisions_journal_ = Journal::open(file(kDecisionsJournal), [&](std::string_view line) {
      auto d = actioner::LoadBalanceDecision::from_json(json::parse(line));
      if (auto it = index.find(d.id); it != index.end()) {
        decisions[it->second] = std::move(d);
      } else {
        index[d.id] = decisions.size();
        decisions.push_back(std::move(d));
      }
      return true;
    });
  }

  bridge_ = std::make_unique<tsdb::IngestBridge>(*bus_, *store_, std::vector<std::string>{cfg_.topic});
  sink_ = std::make_unique<Sink>(*this);
  poller_ = std::make_unique<collector::Poller>(net_, *scheduler_, cfg_.collector, *sink_);
  actioner_ = std::make_unique<actioner::Actioner>(
      net_, *scheduler_, cfg_.actioner, [this](const actioner::LoadBalanceDecision& d) { record_decision(d); });
  actioner_->restore(decisions);

  std::lock_guard lock(mutex_);
  if (state) {
    restore(*state);
  } else {
    fresh_start();
  }
}

Engine::~Engine() { stop_clock(); }

void Engine::open_storage() {
  if (!data_dir_) {
    bus_ = std::make_unique<pipeline::IngestBus>();
    store_ = std::make_unique<tsdb::TimeSeriesStore>();
    return;
  }
  bus_ = std::make_unique<pipeline::IngestBus>(file(kBusJournal));
  store_ = std::make_unique<tsdb::TimeSeriesStore>(file(kPointsJournal));
  trends_journal_ = Journal::open(file(kTrendsJournal), [this](std::string_view line) {
    auto e = analytics::TrendEvent::from_json(json::parse(line).at("event"));
    if (!trend_events_.contains(e.id)) trend_order_.push_back(e.id);
    trend_events_[e.id] = std::move(e);
    return true;
  });
  benchmarks_journal_ = Journal::open(file(kBenchmarksJournal), [this](std::string_view line) {
    auto bm = analytics::Benchmark::from_json(json::parse(line));
    benchmarks_[bm.link.key()] = std::move(bm);
    return true;
  });
  events_journal_ = Journal::open(file(kEventsJournal), [this](std::string_view line) {
    auto e = EventEnvelope::from_json(json::parse(line));
    if (!events_.empty() && e.seq <= events_.back().seq) return false;
    events_.push_back(std::move(e));
    return true;
  });
}

void Engine::fresh_start() {
  // The baseline reading lets the first period produce a utilization sample.
  poller_->poll_now();
  poller_->start();
  checkpoint_locked();
}

void Engine::restore(const json& state) {
  try {
    net_.restore_state(state.at("sim"));
    bridge_->set_offsets(state.at("bridge_offsets").get<std::map<std::string, std::uint64_t>>());
    for (const auto& s : state.at("trend_states")) {
      auto ts = analytics::TrendState::from_json(s);
      trend_states_[ts.link.key()] = std::move(ts);
    }
    for (const auto& s : state.at("share")) {
      share_[{s.at("device").get<std::string>(), s.at("interface").get<std::string>()}]
            [Cidr::parse(s.at("dst").get<std::string>())] = s.at("octets").get<std::uint64_t>();
    }
    rounds_ = state.at("rounds").get<std::size_t>();
    if (!state.at("poller_next_due").is_null()) poller_->start(state.at("poller_next_due").get<TimestampMs>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, fmt::format("{}: {}", file(kStateFile).string(), e.what()));
  }
  // A checkpoint taken before anything was polled has no journals to catch up.
  bridge_->run_once();
  spdlog::info("restored {} at {}", data_dir_->string(), iso8601_ms(net_.clock().now_ms));
}

void Engine::checkpoint() {
  std::lock_guard lock(mutex_);
  checkpoint_locked();
}

void Engine::checkpoint_locked() {
  if (!data_dir_) return;
  json journals{{kPointsJournal, store_->journal_bytes()},
                {kBusJournal, bus_->journal_bytes()},
                {kDecisionsJournal, decisions_journal_.size_bytes()},
                {kTrendsJournal, trends_journal_.size_bytes()},
                {kBenchmarksJournal, benchmarks_journal_.size_bytes()}};
  {
    std::lock_guard ev(events_mutex_);
    journals[kEventsJournal] = events_journal_.size_bytes();
  }
  json trend_states = json::array();
  for (const auto& [_, s] : trend_states_) trend_states.push_back(s.to_json());
  json share = json::array();
  for (const auto& [iface, by_dst] : share_) {
    for (const auto& [dst, octets] : by_dst) {
      share.push_back({{"device", iface.device}, {"interface", iface.interface}, {"dst", dst.str()}, {"octets", octets}});
    }
  }
  json state{{"sim", net_.save_state()},
             {"poller_next_due", poller_->next_due() ? json(*poller_->next_due()) : json(nullptr)},
             {"bridge_offsets", bridge_->offsets()},
             {"trend_states", trend_states},
             {"share", share},
             {"rounds", rounds_},
             {"journals", journals}};
  write_file_atomic(file(kStateFile), state.dump() + "\n");
}

TimestampMs Engine::now() const {
  std::lock_guard lock(mutex_);
  return net_.clock().now_ms;
}

std::size_t Engine::rounds() const {
  std::lock_guard lock(mutex_);
  return rounds_;
}

void Engine::advance(DurationMs duration) {
  if (duration < 0) throw Error(ErrorCode::InvalidDuration, fmt::format("cannot advance by {} ms", duration));
  std::lock_guard lock(mutex_);
  advance_locked(net_.clock().now_ms + duration);
}

void Engine::advance_to(TimestampMs t) {
  std::lock_guard lock(mutex_);
  advance_locked(t);
}

void Engine::advance_locked(TimestampMs t) {
  if (t < net_.clock().now_ms) return;
  scheduler_->run_until(t);
  checkpoint_locked();
}

std::string Engine::src_of(const std::string& device) const {
  return std::string(net_.device(device).kind == netsim::DeviceKind::Traditional ? collector::kSrcCollectd
                                                                                 : collector::kSrcSdn);
}

std::optional<netsim::InterfaceRef> Engine::iface_of(const std::string& host_ip,
                                                      const std::string& interface) const {
  return net_.interface_by_host(host_ip, interface);
}

std::optional<analytics::UtilSample> Engine::latest_utilization(const netsim::InterfaceRef& iface,
                                                                TimestampMs ts) const {
  const auto& dev = net_.device(iface.device);
  const analytics::LinkRef link{dev.mgmt_ip, iface.interface, src_of(iface.device)};
  const auto lookback = 2 * cfg_.collector.period_ms + cfg_.collector.jitter_ms;
  auto pts = store_->query(analytics::out_octets_key(link), ts - lookback, ts + 1);
  if (pts.size() < 2 || pts.back().ts_ms != ts) return std::nullopt;
  std::span<const tsdb::DataPoint> last(pts.data() + pts.size() - 2, 2);
  return analytics::utilization_series(last, static_cast<double>(net_.capacity(iface))).front();
}

actioner::TrendContext Engine::context_for(const MonitoredLink& m, TimestampMs ts) const {
  actioner::TrendContext ctx;
  ctx.congested = m.iface;
  for (const auto& name : net_.interface_names(m.iface.device)) {
    netsim::InterfaceRef ref{m.iface.device, name};
    if (auto s = latest_utilization(ref, ts)) ctx.utilization[ref] = s->utilization;
  }
  if (auto it = share_.find(m.iface); it != share_.end()) ctx.dst_octets = it->second;
  return ctx;
}

void Engine::on_round(TimestampMs ts) {
  bridge_->run_once();
  if (auto err = bridge_->last_error()) spdlog::error("ingest paused: {}", *err);
  for (const auto& m : monitored_) evaluate(m, ts);
  share_.clear();

  std::vector<analytics::Benchmark> due;
  for (const auto& [_, bm] : benchmarks_) {
    if (analytics::should_reset(bm, ts, cfg_.analytics)) due.push_back(bm);
  }
  for (const auto& old : due) {
    auto cfg = cfg_.analytics;
    cfg.benchmark_days = old.days > 0 ? old.days : cfg.benchmark_days;
    try {
      record_benchmark(analytics::build_benchmark(*store_, old.link, old.capacity_bps, cfg, ts, ts));
      spdlog::info("benchmark for {} rebuilt at {}", old.link.key(), iso8601_ms(ts));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientData) throw;
      spdlog::warn("benchmark for {} is due for a rebuild but: {}", old.link.key(), e.what());
    }
  }
  ++rounds_;
  checkpoint_locked();
}

void Engine::evaluate(const MonitoredLink& m, TimestampMs ts) {
  const auto sample = latest_utilization(m.iface, ts);
  if (!sample) return;
  const auto hour = hour_of_day(sample->start_ms);
  const auto key = m.link.key();
  const auto bm = benchmarks_.find(key);

  json payload{{"link", analytics::to_json(m.link)},
               {"ts", ts},
               {"start", sample->start_ms},
               {"hour", hour},
               {"utilization", sample->utilization},
               {"flagged", nullptr},
               {"benchmark_id", nullptr}};
  bool flagged = false;
  if (bm != benchmarks_.end()) {
    flagged = analytics::evaluate_sample(bm->second, cfg_.analytics, hour, sample->utilization);
    payload["flagged"] = flagged;
    payload["benchmark_id"] = bm->second.id();
  }
  emit(EventKind::Sample, ts, std::move(payload));
  if (bm == benchmarks_.end()) return;

  auto& state = trend_states_[key];
  if (state.link.host_ip.empty()) state.link = m.link;
  auto step = analytics::advance_trend(state, flagged, ts, sample->utilization, cfg_.analytics, bm->second.id());
  state = step.state;
  if (!step.transition) return;
  record_trend(*step.transition);
  if (step.transition->kind == analytics::TransitionKind::Confirmed) {
    actioner_->on_trend(*step.transition, context_for(m, ts));
  }
}

void Engine::record_benchmark(const analytics::Benchmark& bm) {
  benchmarks_[bm.link.key()] = bm;
  const auto doc = bm.to_json();
  if (benchmarks_journal_.is_open()) benchmarks_journal_.append(doc.dump());
  emit(EventKind::Benchmark, net_.clock().now_ms, doc);
}

void Engine::record_trend(const analytics::TrendTransition& t) {
  if (!trend_events_.contains(t.event.id)) trend_order_.push_back(t.event.id);
  trend_events_[t.event.id] = t.event;
  ordered_json doc;
  doc["transition"] = to_string(t.kind);
  doc["event"] = t.event.to_json();
  if (trends_journal_.is_open()) trends_journal_.append(doc.dump());
  spdlog::info("trend {} {}", t.event.id, to_string(t.kind));
  emit(EventKind::Trend, net_.clock().now_ms, doc);
}

void Engine::record_decision(const actioner::LoadBalanceDecision& d) {
  const auto doc = d.to_json();
  if (decisions_journal_.is_open()) decisions_journal_.append(doc.dump());
  emit(EventKind::Decision, net_.clock().now_ms, doc);
}

void Engine::emit(EventKind kind, TimestampMs ts, json payload) {
  {
    std::lock_guard lock(events_mutex_);
    EventEnvelope e{events_.empty() ? 1 : events_.back().seq + 1, kind, ts, std::move(payload)};
    if (events_journal_.is_open()) events_journal_.append(e.to_json().dump());
    events_.push_back(std::move(e));
  }
  events_cv_.notify_all();
}

std::vector<EventEnvelope> Engine::events_after(std::uint64_t seq, std::size_t max) const {
  std::lock_guard lock(events_mutex_);
  auto it = std::upper_bound(events_.begin(), events_.end(), seq,
                             [](std::uint64_t s, const EventEnvelope& e) { return s < e.seq; });
  std::vector<EventEnvelope> out;
  for (; it != events_.end() && out.size() < max; ++it) out.push_back(*it);
  return out;
}

bool Engine::wait_event(std::uint64_t seq, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(events_mutex_);
  return events_cv_.wait_for(lock, timeout, [&] { return !events_.empty() && events_.back().seq > seq; });
}

std::uint64_t Engine::last_seq() const {
  std::lock_guard lock(events_mutex_);
  return events_.empty() ? 0 : events_.back().seq;
}

netsim::Injection Engine::inject(const Cidr& src, const Cidr& dst, double factor, DurationMs duration) {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::ValidationError, fmt::format("factor must be a non-negative number, got {}", factor));
  }
  if (duration <= 0) throw Error(ErrorCode::InvalidDuration, fmt::format("duration must be positive, got {}", duration));
  std::lock_guard lock(mutex_);
  const auto& demands = net_.profile().demands;
  if (std::none_of(demands.begin(), demands.end(), [&](const auto& d) { return d.src == src && d.dst == dst; })) {
    throw Error(ErrorCode::UnknownPrefix, fmt::format("no demand {} -> {}", src.str(), dst.str()));
  }
  const auto now = net_.clock().now_ms;
  netsim::Injection inj{src, dst, factor, now, now + duration};
  net_.inject(inj);
  spdlog::info("injected x{} on {} -> {} until {}", factor, src.str(), dst.str(), iso8601_ms(inj.end_ms));
  checkpoint_locked();
  return inj;
}

void Engine::set_noise_enabled(bool enabled) {
  std::lock_guard lock(mutex_);
  net_.set_noise_enabled(enabled);
  cfg_.noise_enabled = enabled;
  write_config_locked();
  checkpoint_locked();
}

std::vector<analytics::Benchmark> Engine::run_benchmarks(int days, const std::optional<analytics::LinkRef>& only) {
  if (days <= 0) throw Error(ErrorCode::ValidationError, fmt::format("days must be positive, got {}", days));
  std::lock_guard lock(mutex_);
  auto cfg = cfg_.analytics;
  cfg.benchmark_days = days;

  std::vector<MonitoredLink> targets;
  if (only) {
    auto ref = iface_of(only->host_ip, only->interface);
    if (!ref) {
      throw Error(ErrorCode::UnknownInterface, fmt::format("no interface {} on {}", only->interface, only->host_ip));
    }
    targets.push_back({analytics::LinkRef{only->host_ip, only->interface, src_of(ref->device)}, *ref,
                       net_.capacity(*ref)});
  } else {
    targets = monitored_;
  }

  const auto now = net_.clock().now_ms;
  std::vector<analytics::Benchmark> built;
  std::vector<std::string> missing;
  for (const auto& m : targets) {
    try {
      built.push_back(analytics::build_benchmark(*store_, m.link, m.capacity_bps, cfg, now, now));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientData) throw;
      for (const auto& d : e.details()) missing.push_back(fmt::format("{}: {}", m.link.key(), d));
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("not enough samples for a {}-day benchmark ending {}", days, iso8601_ms(now)), missing);
  }
  for (const auto& bm : built) record_benchmark(bm);
  checkpoint_locked();
  return built;
}

std::optional<analytics::Benchmark> Engine::benchmark(const std::string& host_ip, const std::string& interface) const {
  std::lock_guard lock(mutex_);
  auto it = benchmarks_.find(analytics::LinkRef{host_ip, interface, ""}.key());
  if (it == benchmarks_.end()) return std::nullopt;
  return it->second;
}

std::vector<analytics::Benchmark> Engine::benchmarks() const {
  std::lock_guard lock(mutex_);
  std::vector<analytics::Benchmark> out;
  for (const auto& [_, bm] : benchmarks_) out.push_back(bm);
  return out;
}

std::vector<analytics::TrendEvent> Engine::trends(std::optional<bool> active) const {
  std::lock_guard lock(mutex_);
  std::vector<analytics::TrendEvent> out;
  for (const auto& id : trend_order_) {
    const auto& e = trend_events_.at(id);
    if (active && *active == e.ended_at_ms.has_value()) continue;
    out.push_back(e);
  }
  return out;
}

ordered_json Engine::series(const SeriesQuery& q) const {
  if (q.from_ms > q.to_ms) {
    throw Error(ErrorCode::InvalidRange, fmt::format("from {} is after to {}", q.from_ms, q.to_ms));
  }
  if (q.metric.empty() || q.host_ip.empty() || q.interface.empty()) {
    throw Error(ErrorCode::ValidationError, "metric, host_ip and interface are required");
  }
  const bool utilization = q.metric == "utilization";
  if (!utilization && !metric_from_name(q.metric)) {
    throw Error(ErrorCode::ValidationError, fmt::format("unknown metric '{}'", q.metric));
  }

  std::lock_guard lock(mutex_);
  const auto ref = iface_of(q.host_ip, q.interface);
  std::string src = q.src;
  if (src.empty()) src = ref ? src_of(ref->device) : std::string(collector::kSrcCollectd);

  std::vector<tsdb::DataPoint> points;
  if (utilization) {
    if (ref) {
      const analytics::LinkRef link{q.host_ip, q.interface, src};
      // An interval belongs to the range by its start, so the closing reading may lie past `to`.
      auto raw = store_->query(analytics::out_octets_key(link), q.from_ms, std::numeric_limits<TimestampMs>::max());
      auto past = std::find_if(raw.begin(), raw.end(), [&](const tsdb::DataPoint& p) { return p.ts_ms >= q.to_ms; });
      if (past != raw.end()) raw.erase(past + 1, raw.end());
      for (const auto& s : analytics::utilization_series(raw, static_cast<double>(net_.capacity(*ref)))) {
        if (s.start_ms < q.to_ms) points.push_back({s.start_ms, s.utilization});
      }
    }
  } else {
    points = store_->query(tsdb::SeriesKey{q.metric, q.host_ip, q.interface, src}, q.from_ms, q.to_ms);
  }
  if (q.bucket_ms) points = tsdb::aggregate(points, *q.bucket_ms, q.fn);

  ordered_json out;
  out["key"] = {{"metric", q.metric}, {"host_ip", q.host_ip}, {"interface", q.interface}, {"src", src}};
  out["points"] = ordered_json::array();
  for (const auto& p : points) out["points"].push_back({{"ts", p.ts_ms}, {"value", p.value}});
  return out;
}

std::vector<actioner::LoadBalanceDecision> Engine::decisions() const {
  std::lock_guard lock(mutex_);
  return actioner_->decisions();
}

actioner::LoadBalanceDecision Engine::approve(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto d = actioner_->approve(id);
  checkpoint_locked();
  return d;
}

actioner::LoadBalanceDecision Engine::revert(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto d = actioner_->revert(id);
  checkpoint_locked();
  return d;
}

SystemConfig Engine::config() const {
  std::lock_guard lock(mutex_);
  return cfg_;
}

SystemConfig Engine::update_config(const json& patch) {
  std::lock_guard lock(mutex_);
  auto next = patch_runtime_config(cfg_, patch);
  file_policy_ = next.actioner.policy;
  if (require_approval_) next.actioner.policy = actioner::Policy::Manual;
  cfg_ = next;
  actioner_->set_config(cfg_.actioner);
  net_.set_noise_enabled(cfg_.noise_enabled);
  write_config_locked();
  checkpoint_locked();
  return cfg_;
}

// --require-approval is a property of this process, not of the data directory.
void Engine::write_config_locked() {
  if (!data_dir_) return;
  auto on_disk = cfg_;
  on_disk.actioner.policy = file_policy_;
  write_file_atomic(file(kConfigFile), config_to_json(on_disk).dump(2) + "\n");
}

ordered_json Engine::topology_json() const {
  std::lock_guard lock(mutex_);
  const auto& spec = net_.topology();
  ordered_json devices = ordered_json::array();
  for (const auto& d : spec.devices) {
    ordered_json ifaces = ordered_json::array();
    for (const auto& name : net_.interface_names(d.id)) {
      netsim::InterfaceRef ref{d.id, name};
      auto peer = net_.peer(ref);
      ordered_json i;
      i["name"] = name;
      i["capacity_bps"] = net_.capacity(ref);
      i["peer"] = peer ? json(ref_json(*peer)) : json(nullptr);
      i["subnet"] = nullptr;
      for (const auto& [prefix, at] : spec.subnets) {
        if (at.at == ref) i["subnet"] = prefix.str();
      }
      ifaces.push_back(std::move(i));
    }
    ordered_json dev;
    dev["id"] = d.id;
    dev["kind"] = netsim::to_string(d.kind);
    dev["mgmt_ip"] = d.mgmt_ip;
    dev["interfaces"] = std::move(ifaces);
    devices.push_back(std::move(dev));
  }
  ordered_json monitored = ordered_json::array();
  for (const auto& m : monitored_) {
    ordered_json j = analytics::to_json(m.link);
    j["device"] = m.iface.device;
    j["capacity_bps"] = m.capacity_bps;
    monitored.push_back(std::move(j));
  }
  ordered_json paths = ordered_json::array();
  for (const auto& [pair, path] : netsim::routing_function(net_)) {
    ordered_json hops = nullptr;
    if (path) {
      hops = ordered_json::array();
      for (const auto& h : *path) hops.push_back({{"device", h.device}, {"egress", h.egress}});
    }
    paths.push_back({{"src", pair.first.str()}, {"dst", pair.second.str()}, {"hops", hops}});
  }
  ordered_json out;
  out["devices"] = std::move(devices);
  out["links"] = config_to_json(cfg_)["topology"]["links"];
  out["subnets"] = config_to_json(cfg_)["topology"]["subnets"];
  out["monitored"] = std::move(monitored);
  out["paths"] = std::move(paths);
  return out;
}

ordered_json Engine::sim_json() const {
  std::lock_guard lock(mutex_);
  ordered_json inj = ordered_json::array();
  for (const auto& i : net_.injections()) {
    inj.push_back({{"src", i.src.str()}, {"dst", i.dst.str()}, {"factor", i.factor}, {"start", i.start_ms}, {"end", i.end_ms}});
  }
  ordered_json out;
  out["now"] = net_.clock().now_ms;
  out["now_iso"] = iso8601_ms(net_.clock().now_ms);
  out["noise_enabled"] = net_.noise_enabled();
  out["acceleration"] = cfg_.acceleration;
  out["rounds"] = rounds_;
  out["last_event_seq"] = last_seq();
  out["next_poll"] = poller_->next_due() ? json(*poller_->next_due()) : json(nullptr);
  out["injections"] = std::move(inj);
  return out;
}

void Engine::start_clock() {
  if (!(cfg_.acceleration > 0.0) || clock_running_.exchange(true)) return;
  clock_thread_ = std::thread([this] {
    auto last = std::chrono::steady_clock::now();
    double pending_ms = 0.0;
    while (clock_running_) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      const auto t = std::chrono::steady_clock::now();
      pending_ms += std::chrono::duration<double, std::milli>(t - last).count() * cfg_.acceleration;
      last = t;
      const auto whole = static_cast<DurationMs>(pending_ms);
      if (whole <= 0) continue;
      pending_ms -= static_cast<double>(whole);
      try {
        std::lock_guard lock(mutex_);
        advance_locked(net_.clock().now_ms + whole);
      } catch (const std::exception& e) {
        spdlog::error("clock driver stopped: {}", e.what());
        clock_running_ = false;
      }
    }
  });
}

void Engine::stop_clock() {
  clock_running_ = false;
  if (clock_thread_.joinable()) clock_thread_.join();
}

}  // namespace trendnet::service
