#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace springmass::detail {

/// Fixed-size pool that runs one task per worker and joins. The calling
/// thread executes task 0, so a pool of size 1 spawns no threads.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned size) : size_(size == 0 ? 1 : size) {
    threads_.reserve(size_ - 1);
    for (unsigned i = 1; i < size_; ++i) {
      threads_.emplace_back([this, i] { worker_loop(i); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      shutdown_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  unsigned size() const noexcept { return size_; }

  /// Runs task(i) for i in [0, size) and returns once all have finished.
  /// The first exception thrown by any task is rethrown here.
  void run(const std::function<void(unsigned)>& task) {
    if (size_ == 1) {
      task(0);
      return;
    }
    {
      std::lock_guard lock(mutex_);
      task_ = &task;
      pending_ = size_ - 1;
      error_ = nullptr;
      ++epoch_;
    }
    wake_.notify_all();
    std::exception_ptr local;
    try {
      task(0);
    } catch (...) {
      local = std::current_exception();
    }
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return pending_ == 0; });
    task_ = nullptr;
    if (local) std::rethrow_exception(local);
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void worker_loop(unsigned index) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(unsigned)>* task = nullptr;
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return shutdown_ || epoch_ != seen; });
        if (shutdown_) return;
        seen = epoch_;
        task = task_;
      }
      std::exception_ptr err;
      try {
        (*task)(index);
      } catch (...) {
        err = std::current_exception();
      }
      {
        std::lock_guard lock(mutex_);
        if (err && !error_) error_ = err;
        if (--pending_ == 0) done_.notify_one();
      }
    }
  }

  unsigned size_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(unsigned)>* task_ = nullptr;
  unsigned pending_ = 0;
  std::uint64_t epoch_ = 0;
  std::exception_ptr error_;
  bool shutdown_ = false;
};

}  // namespace springmass::detail
