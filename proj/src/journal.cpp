// SPDX-License-Identifier: Apache-2.0
#include "trendnet/journal.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "trendnet/error.hpp"

namespace trendnet {

namespace fs = std::filesystem;

Journal Journal::open(const fs::path& path, const LineHandler& replay) {
  Journal j;
  j.path_ = path;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);

  std::uint64_t valid = 0;
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (pos < content.size()) {
      const auto nl = content.find('\n', pos);
      if (nl == std::string::npos) break;
      const std::string_view line(content.data() + pos, nl - pos);
      bool ok = false;
      try {
        ok = replay(line);
      } catch (const std::exception&) {
        ok = false;
      }
      if (!ok) break;
      pos = nl + 1;
    }
    valid = pos;
    if (valid < content.size()) {
      spdlog::warn("{}: dropping corrupt tail at byte {} ({} bytes)", path.string(), valid,
                   content.size() - valid);
      fs::resize_file(path, valid, ec);
      if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot truncate {}", path.string()));
    }
  }
  j.out_.open(path, std::ios::binary | std::ios::app);
  if (!j.out_) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  j.size_ = valid;
  return j;
}

void Journal::append(std::string_view line) {
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, fmt::format("write to {} failed", path_.string()));
  size_ += line.size() + 1;
}

void Journal::truncate(std::uint64_t bytes) {
  if (bytes >= size_) return;
  out_.close();
  std::error_code ec;
  fs::resize_file(path_, bytes, ec);
  if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot truncate {}", path_.string()));
  out_.open(path_, std::ios::binary | std::ios::app);
  size_ = bytes;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot replace {}", path.string()));
}

}  // namespace trendnet
