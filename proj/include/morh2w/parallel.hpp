#pragma once

namespace morh2w {

/// Worker count for parallel loops: MORH2W_THREADS if set and positive,
/// otherwise the OpenMP default.
int worker_threads();

}  // namespace morh2w
