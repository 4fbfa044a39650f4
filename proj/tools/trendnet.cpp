// SPDX-License-Identifier: Apache-2.0
//
// trendnet: headless front end over the same engine the HTTP service uses.
// Every subcommand opens the data directory, does its work and leaves a
// checkpoint behind, so commands can be chained in a script.
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "trendnet/error.hpp"
#include "trendnet/report.hpp"
#include "trendnet/server.hpp"
#include "trendnet/time_util.hpp"

namespace fs = std::filesystem;
using namespace trendnet;
using namespace trendnet::service;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
  std::string data_dir;
  std::string config_path;
  std::string log_level = "warn";
};

SystemConfig base_config(const Globals& g) {
  auto cfg = g.config_path.empty() ? SystemConfig::defaults() : load_config(g.config_path);
  apply_env_overrides(cfg);
  return cfg;
}

fs::path data_dir_of(const Globals& g, const SystemConfig& cfg) {
  return g.data_dir.empty() ? fs::path(cfg.data_dir) : fs::path(g.data_dir);
}

std::unique_ptr<Engine> open_engine(const Globals& g, SystemConfig cfg, bool require_approval = false) {
  Engine::Options o;
  o.data_dir = data_dir_of(g, cfg);
  o.config = std::move(cfg);
  o.require_approval = require_approval;
  return std::make_unique<Engine>(std::move(o));
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path));
}

DurationMs hours_to_ms(double hours) {
  if (!(hours > 0.0)) throw Error(ErrorCode::ValidationError, fmt::format("--hours must be positive, got {}", hours));
  return static_cast<DurationMs>(std::llround(hours * kHourMs));
}

// serve ---------------------------------------------------------------------

struct ServeArgs {
  bool require_approval = false;
  std::string host = "0.0.0.0";
  std::optional<int> port;
};

int run_serve(const Globals& g, const ServeArgs& a) {
  // Block the stop signals before any thread starts, then wait for them here.
  sigset_t stop_set;
  sigemptyset(&stop_set);
  sigaddset(&stop_set, SIGINT);
  sigaddset(&stop_set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_set, nullptr);

  auto cfg = base_config(g);
  auto engine = open_engine(g, cfg, a.require_approval);
  ApiServer server(*engine);
  const int port = server.start(a.host, a.port.value_or(engine->config().port));
  std::cout << fmt::format("listening on {}:{}", a.host, port) << std::endl;
  engine->start_clock();

  int sig = 0;
  sigwait(&stop_set, &sig);
  spdlog::info("signal {}, shutting down", sig);
  engine->stop_clock();
  server.stop();
  engine->checkpoint();
  return 0;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  double hours = 0;
  std::string period;
  std::optional<std::uint64_t> seed;
  std::string noise;
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
  auto cfg = base_config(g);
  const auto dir = data_dir_of(g, cfg);
  const bool fresh = !fs::exists(dir / "config.json");
  std::optional<DurationMs> period;
  if (!a.period.empty()) period = parse_duration(a.period);

  if (fresh) {
    // Scenario parameters only shape a new data directory.
    if (period) {
      cfg.collector.period_ms = *period;
      cfg.analytics.sample_period_ms = *period;
      cfg.actioner.sample_period_ms = *period;
    }
    if (a.seed) cfg.traffic.rng_seed = *a.seed;
    cfg = config_from_json(config_to_json(cfg));
  }
  auto engine = open_engine(g, cfg);
  const auto& live = engine->config();
  if (period && *period != live.collector.period_ms) {
    throw Error(ErrorCode::ValidationError,
                fmt::format("{} polls every {} ms; --period {} needs a fresh data directory", dir.string(),
                            live.collector.period_ms, a.period));
  }
  if (a.seed && *a.seed != live.traffic.rng_seed) {
    throw Error(ErrorCode::ValidationError, fmt::format("{} was seeded with {}; --seed {} needs a fresh data directory",
                                                        dir.string(), live.traffic.rng_seed, *a.seed));
  }
  if (!a.noise.empty()) engine->set_noise_enabled(a.noise == "on");

  engine->advance(hours_to_ms(a.hours));
  std::cout << engine->sim_json().dump() << "\n";
  return 0;
}

// benchmark build -----------------------------------------------------------

int run_benchmark_build(const Globals& g, int days, const std::string& out) {
  auto engine = open_engine(g, base_config(g));
  json docs = json::array();
  for (const auto& bm : engine->run_benchmarks(days)) docs.push_back(bm.to_json());
  write_output(out, json{{"benchmarks", docs}}.dump(2) + "\n");
  return 0;
}

// inject --------------------------------------------------------------------

int run_inject(const Globals& g, const std::string& src, const std::string& dst, double factor, double hours) {
  auto engine = open_engine(g, base_config(g));
  if (!(factor > 0.0)) throw Error(ErrorCode::ValidationError, fmt::format("--factor must be positive, got {}", factor));
  const auto i = engine->inject(Cidr::parse(src), Cidr::parse(dst), factor, hours_to_ms(hours));
  std::cout << json{{"src", i.src.str()}, {"dst", i.dst.str()}, {"factor", i.factor}, {"start", i.start_ms},
                    {"end", i.end_ms}}
                   .dump()
            << "\n";
  return 0;
}

// watch ---------------------------------------------------------------------

struct WatchArgs {
  std::vector<std::string> links;
  bool follow = false;
  std::uint64_t since = 0;
};

std::atomic<bool> g_stop_watch{false};

bool wanted(const json& ev, const std::set<std::string>& links) {
  const auto& kind = ev.at("kind");
  if (kind != "trend" && kind != "decision") return false;
  if (links.empty()) return true;
  const auto& p = ev.at("payload");
  std::string key;
  if (kind == "trend") {
    const auto& link = p.at("event").at("link");
    key = link.at("host_ip").get<std::string>() + "/" + link.at("interface").get<std::string>();
  } else {
    const auto id = p.value("trend_event_id", std::string{});
    key = id.substr(0, id.find('@'));
  }
  return links.count(key) > 0;
}

int run_watch(const Globals& g, const WatchArgs& a) {
  auto cfg = base_config(g);
  const auto path = data_dir_of(g, cfg) / "events.jsonl";
  const std::set<std::string> links(a.links.begin(), a.links.end());
  std::signal(SIGINT, [](int) { g_stop_watch = true; });
  std::signal(SIGTERM, [](int) { g_stop_watch = true; });

  std::uint64_t last = a.since;
  std::streamoff pos = 0;
  std::string partial;
  while (true) {
    std::ifstream in(path, std::ios::binary);
    if (in) {
      in.seekg(0, std::ios::end);
      const auto size = static_cast<std::streamoff>(in.tellg());
      if (size < pos) pos = 0, partial.clear();  // truncated by a recovery
      in.seekg(pos);
      std::string chunk(static_cast<std::size_t>(size - pos), '\0');
      in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
      pos = size;
      partial += chunk;
      std::size_t nl;
      while ((nl = partial.find('\n')) != std::string::npos) {
        const auto line = partial.substr(0, nl);
        partial.erase(0, nl + 1);
        auto ev = json::parse(line, nullptr, false);
        if (ev.is_discarded() || !ev.contains("seq")) continue;
        const auto seq = ev["seq"].get<std::uint64_t>();
        if (seq <= last) continue;
        last = seq;
        if (wanted(ev, links)) std::cout << ev.dump() << "\n" << std::flush;
      }
    }
    if (!a.follow || g_stop_watch) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    if (g_stop_watch) break;
  }
  return 0;
}

// report --------------------------------------------------------------------

int run_report(const Globals& g, const std::string& out, const std::string& format) {
  auto engine = open_engine(g, base_config(g));
  const auto doc = build_report(*engine);
  write_output(out, format == "csv" ? report_csv(doc) : doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trendnet: trend-based load balancing over a simulated hybrid network"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--data-dir", g.data_dir, "State directory (default: server.data_dir from the config)");
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::function<int()> action;

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API and event stream until interrupted");
  serve_cmd->add_flag("--require-approval", serve.require_approval, "Hold decisions until approved");
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Listen port (0 picks one); overrides config and TRENDNET_PORT")
      ->check(CLI::Range(0, 65535));
  serve_cmd->callback([&] { action = [&] { return run_serve(g, serve); }; });

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Advance virtual time, polling and evaluating as it goes");
  sim_cmd->add_option("--hours", sim.hours, "Virtual hours to run")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--period", sim.period, "Poll period, e.g. 1h or 15m (new data directory only)");
  sim_cmd->add_option("--seed", sim.seed, "Traffic noise seed (new data directory only)");
  sim_cmd->add_option("--noise", sim.noise, "Switch traffic noise on or off")->check(CLI::IsMember({"on", "off"}));
  sim_cmd->callback([&] { action = [&] { return run_simulate(g, sim); }; });

  int days = 0;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("benchmark", "Benchmark operations");
  bench_cmd->require_subcommand(1);
  auto* build_cmd = bench_cmd->add_subcommand("build", "Build per-hour benchmarks for every monitored link");
  build_cmd->add_option("--days", days, "Days of history to use")->required()->check(CLI::PositiveNumber);
  build_cmd->add_option("--out", bench_out, "Write the benchmark documents here instead of stdout");
  build_cmd->callback([&] { action = [&] { return run_benchmark_build(g, days, bench_out); }; });

  std::string src, dst;
  double factor = 0, inject_hours = 0;
  auto* inject_cmd = app.add_subcommand("inject", "Scale a demand's offered load for a while");
  inject_cmd->add_option("--src", src, "Source prefix")->required();
  inject_cmd->add_option("--dst", dst, "Destination prefix")->required();
  inject_cmd->add_option("--factor", factor, "Load multiplier")->required()->check(CLI::PositiveNumber);
  inject_cmd->add_option("--hours", inject_hours, "Virtual hours")->required()->check(CLI::PositiveNumber);
  inject_cmd->callback([&] { action = [&] { return run_inject(g, src, dst, factor, inject_hours); }; });

  WatchArgs watch;
  auto* watch_cmd = app.add_subcommand("watch", "Print trend and decision transitions as JSON lines");
  watch_cmd->add_option("--links", watch.links, "Only these host_ip/interface links");
  watch_cmd->add_flag("--follow,-f", watch.follow, "Keep waiting for new transitions");
  watch_cmd->add_option("--since", watch.since, "Start after this event seq");
  watch_cmd->callback([&] { action = [&] { return run_watch(g, watch); }; });

  std::string report_out, format = "json";
  auto* report_cmd = app.add_subcommand("report", "Write the benchmark report");
  report_cmd->add_option("--out", report_out, "Output path, - for stdout")->required();
  report_cmd->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  report_cmd->callback([&] { action = [&] { return run_report(g, report_out, format); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("trendnet"));
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "trendnet: " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "trendnet: " << e.what() << "\n";
    return 1;
  }
}
