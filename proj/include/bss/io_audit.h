// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_IO_AUDIT_H_
#define BSS_IO_AUDIT_H_

#include <string>
#include <vector>

namespace bss {
namespace io_audit {

// Process-wide log of every file path opened for reading by ReadWav and
// ReadTensor. Lets tests prove that a pipeline stage never touched
// ground-truth files.
void Record(const std::string& path);
void Reset();
std::vector<std::string> Paths();

}  // namespace io_audit
}  // namespace bss

#endif  // BSS_IO_AUDIT_H_
