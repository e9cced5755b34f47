#include "rmfp/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace rmfp {
namespace {

class ThreadPool {
 public:
  explicit ThreadPool(std::size_t n) : size_(std::max<std::size_t>(n, 1)) {
    for (std::size_t w = 1; w < size_; ++w) {
      workers_.emplace_back([this, w] { worker(w); });
    }
  }

  ~ThreadPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    workers_.clear();
  }

  std::size_t size() const noexcept { return size_; }

  void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    {
      std::lock_guard lock(mu_);
      body_ = &body;
      n_ = n;
      pending_ = size_ - 1;
      ++generation_;
    }
    cv_.notify_all();
    guarded(body, 0, chunk_end(0));
    std::unique_lock lock(mu_);
    done_.wait(lock, [this] { return pending_ == 0; });
    body_ = nullptr;
    if (error_) {
      auto e = std::exchange(error_, nullptr);
      std::rethrow_exception(e);
    }
  }

 private:
  void guarded(const std::function<void(std::size_t, std::size_t)>& body, std::size_t begin,
               std::size_t end) {
    try {
      if (begin < end) body(begin, end);
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }

  std::size_t chunk_begin(std::size_t w) const { return n_ * w / size_; }
  std::size_t chunk_end(std::size_t w) const { return n_ * (w + 1) / size_; }

  void worker(std::size_t w) {
    std::size_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t, std::size_t)>* body = nullptr;
      std::size_t begin = 0;
      std::size_t end = 0;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        body = body_;
        begin = chunk_begin(w);
        end = chunk_end(w);
      }
      guarded(*body, begin, end);
      {
        std::lock_guard lock(mu_);
        --pending_;
      }
      done_.notify_one();
    }
  }

  std::size_t size_;
  std::vector<std::jthread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_;
  const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
  std::size_t n_ = 0;
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

std::size_t env_threads() {
  if (const char* env = std::getenv("MFP_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return 1;
}

std::unique_ptr<ThreadPool>& pool() {
  static std::unique_ptr<ThreadPool> instance = std::make_unique<ThreadPool>(env_threads());
  return instance;
}

double tree_sum_range(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return tree_sum_range(v, half) + tree_sum_range(v + half, n - half);
}

}  // namespace

std::size_t thread_count() { return pool()->size(); }

void set_thread_count(std::size_t n) {
  if (n == 0) n = env_threads();
  if (n == pool()->size()) return;
  pool() = std::make_unique<ThreadPool>(n);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_parallel) {
  auto& p = *pool();
  if (p.size() == 1 || n < min_parallel) {
    body(0, n);
    return;
  }
  p.run(n, body);
}

double tree_sum(std::span<const double> values) {
  return tree_sum_range(values.data(), values.size());
}

}  // namespace rmfp
