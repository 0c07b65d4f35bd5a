#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace seqrank {

// Worker-pool default: SEQRANK_THREADS env var, else hardware concurrency.
int default_thread_count();

// Runs fn(i) for i in [0, count) across `threads` workers. Work items must
// be independent; callers own any result slots (index-addressed, so the
// reduction is deterministic).
void parallel_for(std::int64_t count, int threads,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace seqrank
