// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/io_audit.h"

#include <mutex>

namespace bss {
namespace io_audit {

namespace {
std::mutex mutex;
std::vector<std::string> opened;
}  // namespace

void Record(const std::string& path) {
  std::lock_guard<std::mutex> lock(mutex);
  opened.push_back(path);
}

void Reset() {
  std::lock_guard<std::mutex> lock(mutex);
  opened.clear();
}

std::vector<std::string> Paths() {
  std::lock_guard<std::mutex> lock(mutex);
  return opened;
}

}  // namespace io_audit
}  // namespace bss
