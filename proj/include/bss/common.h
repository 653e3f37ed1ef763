// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_COMMON_H_
#define BSS_COMMON_H_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bss {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void Fail(const std::string& msg) { throw Error(msg); }

inline void Require(bool cond, const std::string& msg) {
  if (!cond) Fail(msg);
}

}  // namespace bss

#endif  // BSS_COMMON_H_
