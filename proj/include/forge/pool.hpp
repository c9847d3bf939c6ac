#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace forge {

// Counting semaphore bounding in-flight requests against a shared resource
// (model backend, toolchain worker pool).
class Gate {
 public:
  explicit Gate(size_t slots) : slots_(slots == 0 ? 1 : slots) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++slots_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  size_t slots_;
};

class GateHold {
 public:
  explicit GateHold(Gate& g) : gate_(g) { gate_.acquire(); }
  ~GateHold() { gate_.release(); }
  GateHold(const GateHold&) = delete;
  GateHold& operator=(const GateHold&) = delete;

 private:
  Gate& gate_;
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results land at
// their input index so concurrency never reorders downstream aggregation.
// The first exception (lowest index) is rethrown after all workers join.
template <typename Fn>
void parallel_for(size_t n, size_t workers, Fn&& fn) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  std::mutex next_mutex;
  size_t next = 0;
  auto body = [&] {
    for (;;) {
      size_t i;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= n) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (size_t w = 0; w < workers; ++w) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace forge
