// SPDX-License-Identifier: Apache-2.0
#include "trendnet/report.hpp"

#include <fmt/format.h>

#include "trendnet/error.hpp"

namespace trendnet::service {

using nlohmann::ordered_json;

ordered_json build_report(const Engine& engine) {
  const auto bms = engine.benchmarks();
  if (bms.empty()) throw Error(ErrorCode::InsufficientData, "no benchmark has been built yet");
  const auto cfg = engine.config();

  ordered_json links = ordered_json::array();
  for (const auto& bm : bms) {
    ordered_json rows = ordered_json::array();
    for (int h = 0; h < 24; ++h) {
      rows.push_back({{"hour", h}, {"mean_util", bm.hours[h].mean}, {"sigma", bm.hours[h].sigma}});
    }
    links.push_back({{"link", analytics::to_json(bm.link)},
                     {"benchmark_id", bm.id()},
                     {"samples", bm.total_samples()},
                     {"rows", std::move(rows)}});
  }
  ordered_json out;
  out["scenario"] = {{"days", bms.front().days},
                     {"period_ms", cfg.collector.period_ms},
                     {"seed", cfg.traffic.rng_seed}};
  out["links"] = std::move(links);
  return out;
}

std::string report_csv(const ordered_json& report) {
  std::string out = "host_ip,interface,hour,mean,sigma\n";
  for (const auto& l : report.at("links")) {
    for (const auto& r : l.at("rows")) {
      out += fmt::format("{},{},{},{},{}\n", l["link"]["host_ip"].get<std::string>(),
                         l["link"]["interface"].get<std::string>(), r["hour"].get<int>(), r["mean_util"].get<double>(),
                         r["sigma"].get<double>());
    }
  }
  return out;
}

}  // namespace trendnet::service
