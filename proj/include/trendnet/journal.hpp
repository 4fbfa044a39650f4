// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

namespace trendnet {

/// Append-only line journal. Opening replays every valid line; the first line
/// the validator rejects (or an unterminated tail) marks a torn write and the
/// file is truncated there.
class Journal {
 public:
  using LineHandler = std::function<bool(std::string_view line)>;

  Journal() = default;
  /// Throws Error(IoError) naming the file.
  static Journal open(const std::filesystem::path& path, const LineHandler& replay);

  bool is_open() const noexcept { return out_.is_open(); }
  void append(std::string_view line);
  std::uint64_t size_bytes() const noexcept { return size_; }
  /// Cuts the journal back to `bytes` (a previously observed size).
  void truncate(std::uint64_t bytes);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t size_ = 0;
};

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace trendnet
