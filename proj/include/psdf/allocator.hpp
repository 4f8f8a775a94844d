#pragma once

#include <cstdlib>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace psdf {

/// Keeps freed tensor buffers in the process heap. Chunked inference frees
/// and reallocates tens of megabytes per chunk; with glibc's default
/// thresholds each round trip goes back to the kernel and is page-faulted in
/// again. No-op on other C libraries.
inline void retain_freed_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace psdf
