// SPDX-License-Identifier: Apache-2.0
#include "trendnet/error.hpp"

namespace trendnet {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateDeviceId: return "DuplicateDeviceId";
    case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
    case ErrorCode::NonPositiveCapacity: return "NonPositiveCapacity";
    case ErrorCode::SubnetUnattached: return "SubnetUnattached";
    case ErrorCode::DuplicateInterface: return "DuplicateInterface";
    case ErrorCode::InvalidPrefix: return "InvalidPrefix";
    case ErrorCode::UnknownDevice: return "UnknownDevice";
    case ErrorCode::WrongDeviceKind: return "WrongDeviceKind";
    case ErrorCode::UnknownRouter: return "UnknownRouter";
    case ErrorCode::UnknownInterface: return "UnknownInterface";
    case ErrorCode::UnknownSwitch: return "UnknownSwitch";
    case ErrorCode::UnknownPort: return "UnknownPort";
    case ErrorCode::DuplicateCookie: return "DuplicateCookie";
    case ErrorCode::UnknownCookie: return "UnknownCookie";
    case ErrorCode::UnknownPrefix: return "UnknownPrefix";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::InvalidDuration: return "InvalidDuration";
    case ErrorCode::SinkClosed: return "SinkClosed";
    case ErrorCode::MalformedSample: return "MalformedSample";
    case ErrorCode::BusClosed: return "BusClosed";
    case ErrorCode::UnknownTopic: return "UnknownTopic";
    case ErrorCode::EmptyAllowList: return "EmptyAllowList";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::ZeroInterval: return "ZeroInterval";
    case ErrorCode::ZeroCapacity: return "ZeroCapacity";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::OutOfOrderSample: return "OutOfOrderSample";
    case ErrorCode::NoAlternatePath: return "NoAlternatePath";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::UnknownDecision: return "UnknownDecision";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::vector<std::string> details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message),
      details_(std::move(details)) {}

}  // namespace trendnet
