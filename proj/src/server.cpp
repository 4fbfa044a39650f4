// SPDX-License-Identifier: Apache-2.0
#include "trendnet/server.hpp"

#include <charconv>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "trendnet/error.hpp"
#include "trendnet/time_util.hpp"

namespace trendnet::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";
constexpr auto kKeepalive = std::chrono::seconds(2);
constexpr auto kWaitSlice = std::chrono::milliseconds(250);

void reply(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                 const std::vector<std::string>& details = {}) {
  ordered_json body;
  body["error"] = code;
  body["message"] = message;
  body["details"] = details;
  reply(res, status, body);
}

json body_object(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j;
  try {
    j = json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("request body: {}", e.what()));
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
  return j;
}

std::int64_t int_param(const httplib::Request& req, const char* name, std::int64_t fallback) {
  if (!req.has_param(name)) return fallback;
  const auto text = req.get_param_value(name);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw Error(ErrorCode::ValidationError, fmt::format("query parameter {} must be an integer, got '{}'", name, text));
  }
  return v;
}

double positive_number(const json& body, const char* name) {
  if (!body.contains(name) || !body[name].is_number()) {
    throw Error(ErrorCode::ValidationError, fmt::format("{} must be a number", name));
  }
  const double v = body[name].get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::ValidationError, fmt::format("{} must be positive", name));
  }
  return v;
}

std::string string_field(const json& body, const char* name) {
  if (!body.contains(name) || !body[name].is_string()) {
    throw Error(ErrorCode::ValidationError, fmt::format("{} must be a string", name));
  }
  return body[name].get<std::string>();
}

DurationMs hours_ms(double hours) { return static_cast<DurationMs>(std::llround(hours * kHourMs)); }

std::string sse_frame(const EventEnvelope& ev) {
  return fmt::format("id: {}\nevent: {}\ndata: {}\n\n", ev.seq, to_string(ev.kind), ev.to_json().dump());
}

/// Wraps a handler so domain errors become JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), to_string(e.code()), e.message(), e.details());
    } catch (const json::exception& e) {
      reply_error(res, 400, "ParseError", e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      reply_error(res, 500, "InternalError", e.what());
    }
  };
}

}  // namespace

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidPrefix:
    case ErrorCode::InvalidDuration:
    case ErrorCode::InvalidRange:
    case ErrorCode::NonFiniteValue:
      return 400;
    case ErrorCode::UnknownDevice:
    case ErrorCode::UnknownRouter:
    case ErrorCode::UnknownInterface:
    case ErrorCode::UnknownSwitch:
    case ErrorCode::UnknownPort:
    case ErrorCode::UnknownCookie:
    case ErrorCode::UnknownPrefix:
    case ErrorCode::UnknownTopic:
    case ErrorCode::UnknownDecision:
      return 404;
    case ErrorCode::IllegalTransition:
    case ErrorCode::InsufficientData:
      return 409;
    default:
      return 500;
  }
}

ApiServer::ApiServer(Engine& engine) : engine_(engine), http_(std::make_unique<httplib::Server>()) {
  http_->new_task_queue = [] { return new httplib::ThreadPool(16); };
  routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoError, fmt::format("cannot bind {}:{}", host, port));
  return bound;
}

void ApiServer::serve() { http_->listen_after_bind(); }

int ApiServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { serve(); });
  http_->wait_until_ready();
  return bound;
}

void ApiServer::stop() {
  stopping_ = true;
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

void ApiServer::routes() {
  auto& s = *http_;
  const std::string api = "/api/v1";

  s.Get(api + "/health", guarded([](const auto&, auto& res) { reply(res, 200, {{"status", "ok"}}); }));

  s.Get(api + "/topology", guarded([this](const auto&, auto& res) { reply(res, 200, engine_.topology_json()); }));

  s.Get(api + "/config",
        guarded([this](const auto&, auto& res) { reply(res, 200, config_to_json(engine_.config())); }));

  s.Put(api + "/config", guarded([this](const httplib::Request& req, auto& res) {
          reply(res, 200, config_to_json(engine_.update_config(body_object(req))));
        }));

  s.Get(api + "/series", guarded([this](const httplib::Request& req, auto& res) {
          SeriesQuery q;
          q.metric = req.get_param_value("metric");
          q.host_ip = req.get_param_value("host_ip");
          q.interface = req.get_param_value("interface");
          q.src = req.get_param_value("src");
          q.from_ms = int_param(req, "from", q.from_ms);
          q.to_ms = int_param(req, "to", q.to_ms);
          if (req.has_param("bucket_ms")) {
            const auto text = req.get_param_value("bucket_ms");
            const bool numeric = !text.empty() && text.find_first_not_of("0123456789") == std::string::npos;
            q.bucket_ms = numeric ? int_param(req, "bucket_ms", 0) : parse_duration(text);
            if (*q.bucket_ms <= 0) throw Error(ErrorCode::InvalidDuration, "bucket_ms must be positive");
          }
          if (req.has_param("fn")) q.fn = tsdb::aggregate_fn_from_string(req.get_param_value("fn"));
          reply(res, 200, engine_.series(q));
        }));

  s.Post(api + "/benchmark/run", guarded([this](const httplib::Request& req, auto& res) {
           const auto body = body_object(req);
           int days = engine_.config().analytics.benchmark_days;
           if (body.contains("days")) {
             if (!body["days"].is_number_integer()) throw Error(ErrorCode::ValidationError, "days must be an integer");
             days = body["days"].get<int>();
           }
           std::optional<analytics::LinkRef> only;
           if (body.contains("host_ip") || body.contains("interface")) {
             only = analytics::LinkRef{string_field(body, "host_ip"), string_field(body, "interface"), ""};
           }
           auto bms = engine_.run_benchmarks(days, only);
           if (only) {
             reply(res, 200, bms.at(0).to_json());
             return;
           }
           ordered_json all = ordered_json::array();
           for (const auto& b : bms) all.push_back(b.to_json());
           reply(res, 200, {{"benchmarks", all}});
         }));

  s.Get(api + "/benchmark", guarded([this](const httplib::Request& req, auto& res) {
          if (req.has_param("host_ip") || req.has_param("interface")) {
            const auto host = req.get_param_value("host_ip"), iface = req.get_param_value("interface");
            auto bm = engine_.benchmark(host, iface);
            if (!bm) {
              reply_error(res, 404, "UnknownBenchmark", fmt::format("no benchmark for {}/{}", host, iface));
              return;
            }
            reply(res, 200, bm->to_json());
            return;
          }
          ordered_json all = ordered_json::array();
          for (const auto& b : engine_.benchmarks()) all.push_back(b.to_json());
          reply(res, 200, {{"benchmarks", all}});
        }));

  s.Get(api + "/trends", guarded([this](const httplib::Request& req, auto& res) {
          std::optional<bool> active;
          if (req.has_param("active")) {
            const auto v = req.get_param_value("active");
            if (v != "true" && v != "false") {
              throw Error(ErrorCode::ValidationError, fmt::format("active must be true or false, got '{}'", v));
            }
            active = v == "true";
          }
          ordered_json out = ordered_json::array();
          for (const auto& t : engine_.trends(active)) out.push_back(t.to_json());
          reply(res, 200, out);
        }));

  s.Get(api + "/decisions", guarded([this](const auto&, auto& res) {
          ordered_json out = ordered_json::array();
          for (const auto& d : engine_.decisions()) out.push_back(d.to_json());
          reply(res, 200, out);
        }));

  s.Post(api + R"(/decisions/([^/]+)/(approve|revert))", guarded([this](const httplib::Request& req, auto& res) {
           const std::string id = req.matches[1];
           const auto d = req.matches[2] == "approve" ? engine_.approve(id) : engine_.revert(id);
           reply(res, 200, d.to_json());
         }));

  s.Post(api + "/sim/scenario", guarded([this](const httplib::Request& req, auto& res) {
           const auto body = body_object(req);
           if (!body.contains("inject") || !body["inject"].is_object()) {
             throw Error(ErrorCode::ValidationError, "inject must be an object");
           }
           const auto& inj = body["inject"];
           const auto src = Cidr::parse(string_field(inj, "src_prefix"));
           const auto dst = Cidr::parse(string_field(inj, "dst_prefix"));
           const auto i = engine_.inject(src, dst, positive_number(inj, "factor"), hours_ms(positive_number(inj, "hours")));
           reply(res, 200,
                 {{"injection",
                   {{"src", i.src.str()}, {"dst", i.dst.str()}, {"factor", i.factor}, {"start", i.start_ms}, {"end", i.end_ms}}},
                  {"sim", engine_.sim_json()}});
         }));

  s.Post(api + "/sim/advance", guarded([this](const httplib::Request& req, auto& res) {
           engine_.advance(hours_ms(positive_number(body_object(req), "hours")));
           reply(res, 200, engine_.sim_json());
         }));

  s.Get(api + "/sim", guarded([this](const auto&, auto& res) { reply(res, 200, engine_.sim_json()); }));

  auto events = guarded([this](const httplib::Request& req, httplib::Response& res) {
    // Resume point: Last-Event-ID, then ?since, else only what happens from now on.
    std::uint64_t cursor = engine_.last_seq();
    if (req.has_header("Last-Event-ID")) {
      const auto text = req.get_header_value("Last-Event-ID");
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), cursor);
      if (ec != std::errc{} || p != text.data() + text.size()) {
        throw Error(ErrorCode::ValidationError, fmt::format("Last-Event-ID must be an integer, got '{}'", text));
      }
    } else if (req.has_param("since")) {
      cursor = static_cast<std::uint64_t>(int_param(req, "since", 0));
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, cursor, idle_since = std::chrono::steady_clock::now()](std::size_t, httplib::DataSink& sink) mutable {
          if (stopping_) {
            sink.done();
            return true;
          }
          auto batch = engine_.events_after(cursor, 256);
          if (batch.empty()) {
            engine_.wait_event(cursor, kWaitSlice);
            if (std::chrono::steady_clock::now() - idle_since >= kKeepalive) {
              idle_since = std::chrono::steady_clock::now();
              static constexpr std::string_view ping = ": keepalive\n\n";
              return sink.write(ping.data(), ping.size());
            }
            return sink.is_writable();
          }
          std::string out;
          for (const auto& ev : batch) out += sse_frame(ev);
          cursor = batch.back().seq;
          idle_since = std::chrono::steady_clock::now();
          return sink.write(out.data(), out.size());
        });
  });
  s.Get(api + "/events", events);
  s.Get("/events", events);

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      reply_error(res, 404, "NotFound", fmt::format("no route for {} {}", req.method, req.path));
    } else if (res.status == 405) {
      reply_error(res, 405, "MethodNotAllowed", fmt::format("{} not allowed on {}", req.method, req.path));
    }
  });
}

}  // namespace trendnet::service
