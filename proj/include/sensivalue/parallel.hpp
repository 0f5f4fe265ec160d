#pragma once

// Deterministic seeding and a small index-parallel loop.

#include <cstddef>
#include <cstdint>
#include <functional>

namespace sensivalue {

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Derive an independent stream seed from a master seed and two counters.
/// The mapping is fixed, so results never depend on execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0);

/// Worker count. SENSIVALUE_THREADS caps it when set to a positive integer;
/// otherwise hardware concurrency is used.
std::size_t thread_count();

/// Override of the thread count for the current process (0 restores the
/// environment/hardware default). Used by tests and the CLI.
void set_thread_count(std::size_t n);

/// Runs fn(i) for i in [0, n). Work is split across thread_count() workers;
/// callers write results into per-index slots so output is order independent.
/// The first exception thrown by any task is rethrown after all workers join.
/// A parallel_for issued from inside a task runs serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace sensivalue
