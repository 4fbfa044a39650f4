// SPDX-License-Identifier: Apache-2.0
#include "trendnet/counters.hpp"

namespace trendnet {

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::InOctets: return "inOctets";
    case Metric::OutOctets: return "outOctets";
    case Metric::InPkts: return "inPkts";
    case Metric::OutPkts: return "outPkts";
    case Metric::InDiscards: return "inDiscards";
    case Metric::OutDiscards: return "outDiscards";
  }
  return "";
}

std::optional<Metric> metric_from_name(std::string_view name) noexcept {
  for (auto m : kAllMetrics) {
    if (metric_name(m) == name) return m;
  }
  return std::nullopt;
}

std::uint32_t CounterSet::get(Metric m) const noexcept {
  return const_cast<CounterSet*>(this)->at(m);
}

std::uint32_t& CounterSet::at(Metric m) noexcept {
  switch (m) {
    case Metric::InOctets: return in_octets;
    case Metric::OutOctets: return out_octets;
    case Metric::InPkts: return in_pkts;
    case Metric::OutPkts: return out_pkts;
    case Metric::InDiscards: return in_discards;
    case Metric::OutDiscards: break;
  }
  return out_discards;
}

}  // namespace trendnet
