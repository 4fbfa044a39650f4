// SPDX-License-Identifier: Apache-2.0
//
// The per-link benchmark report written by `trendnet report`.
#pragma once

#include <string>

#include "json.hpp"
#include "trendnet/engine.hpp"

namespace trendnet::service {

/// {scenario{days, period_ms, seed}, links[{link, benchmark_id, samples,
/// rows[{hour, mean_util, sigma}]}]}, one entry per stored benchmark.
/// Throws Error(InsufficientData) when no benchmark has been built.
nlohmann::ordered_json build_report(const Engine& engine);

/// One "host_ip,interface,hour,mean,sigma" line per row, with a header.
std::string report_csv(const nlohmann::ordered_json& report);

}  // namespace trendnet::service
