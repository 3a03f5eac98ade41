#include "morh2w/parallel.hpp"

#include <cstdlib>

#include <omp.h>

namespace morh2w {

int worker_threads() {
  if (const char* env = std::getenv("MORH2W_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

}  // namespace morh2w
