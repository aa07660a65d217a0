#include "objslam/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace objslam {

namespace {

struct JobState {
  std::function<void(int)> job;
  int count = 0;
  std::atomic<int> next{0};
  std::atomic<int> remaining{0};
  std::mutex mutex;
  std::condition_variable done;
};

class WorkerPool {
 public:
  static WorkerPool& instance() {
    static WorkerPool pool;
    return pool;
  }

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  void run(int num_chunks, std::function<void(int)> job) {
    if (num_chunks <= 0) return;
    if (threads_.empty() || num_chunks == 1) {
      for (int c = 0; c < num_chunks; ++c) job(c);
      return;
    }
    auto state = std::make_shared<JobState>();
    state->job = std::move(job);
    state->count = num_chunks;
    state->remaining.store(num_chunks, std::memory_order_relaxed);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      current_ = state;
      ++generation_;
    }
    wake_.notify_all();

    execute(*state);  // caller participates

    std::unique_lock<std::mutex> lock(state->mutex);
    state->done.wait(lock, [&] {
      return state->remaining.load(std::memory_order_acquire) == 0;
    });
  }

 private:
  WorkerPool() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("OBJSLAM_THREADS")) {
      int cap = std::atoi(env);
      if (cap >= 1) n = std::min(n, cap);
    }
    for (int i = 1; i < n; ++i)
      threads_.emplace_back([this] { worker_loop(); });
  }

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  static void execute(JobState& state) {
    for (;;) {
      const int c = state.next.fetch_add(1, std::memory_order_relaxed);
      if (c >= state.count) return;
      state.job(c);
      if (state.remaining.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::lock_guard<std::mutex> lock(state.mutex);
        state.done.notify_all();
      }
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::shared_ptr<JobState> state;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        state = current_;
      }
      if (state) execute(*state);
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::shared_ptr<JobState> current_;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace

int worker_count() { return WorkerPool::instance().size(); }

void parallel_chunks(int begin, int end, int grain,
                     const std::function<void(int, int)>& fn) {
  if (end <= begin) return;
  grain = std::max(grain, 1);
  const int span = end - begin;
  const int num_chunks = (span + grain - 1) / grain;
  WorkerPool::instance().run(num_chunks, [&, begin, end, grain](int c) {
    const int b = begin + c * grain;
    const int e = std::min(end, b + grain);
    fn(b, e);
  });
}

void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
  parallel_chunks(begin, end, 8, [&](int b, int e) {
    for (int i = b; i < e; ++i) fn(i);
  });
}

}  // namespace objslam
