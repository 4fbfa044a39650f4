// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trendnet {

enum class ErrorCode {
  // topology / simulator
  DuplicateDeviceId,
  DanglingEndpoint,
  NonPositiveCapacity,
  SubnetUnattached,
  DuplicateInterface,
  InvalidPrefix,
  UnknownDevice,
  WrongDeviceKind,
  UnknownRouter,
  UnknownInterface,
  UnknownSwitch,
  UnknownPort,
  DuplicateCookie,
  UnknownCookie,
  UnknownPrefix,
  NoPath,
  InvalidDuration,
  // collector / pipeline
  SinkClosed,
  MalformedSample,
  BusClosed,
  UnknownTopic,
  EmptyAllowList,
  // tsdb / analytics
  NonFiniteValue,
  InvalidRange,
  ZeroInterval,
  ZeroCapacity,
  InsufficientData,
  OutOfOrderSample,
  // actioner
  NoAlternatePath,
  IllegalTransition,
  UnknownDecision,
  // service
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a named error code. `details` holds the individual
/// violations for errors that report more than one (validation, missing hours).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::vector<std::string> details = {});

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }
  /// what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::vector<std::string> details_;
};

}  // namespace trendnet
