// Static-partition worker pool for independent Monte-Carlo trials and sweep
// points. Results are written by index, so output never depends on the
// thread count.
#pragma once

#include <functional>

namespace mmrelay {

// Hardware concurrency, capped by MMRELAY_THREADS when set.
int worker_count();

void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace mmrelay
