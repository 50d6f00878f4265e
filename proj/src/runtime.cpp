#include "respar/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

namespace respar {

StagePool::StagePool(int num_stages, int num_workers)
    : num_stages_(num_stages),
      num_workers_(std::clamp(num_workers, 1, std::max(num_stages, 1))),
      busy_(num_stages, 0.0) {
  if (num_stages < 1) throw std::invalid_argument("StagePool: need at least one stage");
  if (num_workers_ > 1) {
    threads_.reserve(num_workers_);
    for (int w = 0; w < num_workers_; ++w) threads_.emplace_back(&StagePool::worker_loop, this, w);
  }
}

StagePool::~StagePool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_start_.notify_all();
  for (auto& t : threads_) t.join();
}

void StagePool::run_stage(int k, const std::function<void(int)>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fn(k);
  } catch (...) {
    std::lock_guard<std::mutex> lock(mu_);
    failures_.emplace_back(k, std::current_exception());
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  busy_[k] = dt.count();
}

void StagePool::run_iteration(const std::function<void(int)>& fn) {
  failures_.clear();
  ++generation_;
  if (num_workers_ == 1) {
    // Sequential reference execution.
    for (int k = 0; k < num_stages_; ++k) run_stage(k, fn);
  } else {
    {
      std::lock_guard<std::mutex> lock(mu_);
      fn_ = &fn;
      pending_ = num_workers_;
    }
    cv_start_.notify_all();
    std::unique_lock<std::mutex> lock(mu_);
    cv_done_.wait(lock, [&] { return pending_ == 0; });
    fn_ = nullptr;
  }
  if (!failures_.empty()) {
    auto first = std::min_element(failures_.begin(), failures_.end(),
                                  [](const auto& a, const auto& b) { return a.first < b.first; });
    try {
      std::rethrow_exception(first->second);
    } catch (const std::exception& e) {
      throw StageError(first->first, e.what());
    } catch (...) {
      throw StageError(first->first, "unknown error");
    }
  }
}

void StagePool::worker_loop(int w) {
  long seen = 0;
  while (true) {
    const std::function<void(int)>* fn = nullptr;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_start_.wait(lock, [&] { return stop_ || (fn_ != nullptr && generation_ != seen); });
      if (stop_) return;
      seen = generation_;
      fn = fn_;
    }
    for (int k = w; k < num_stages_; k += num_workers_) run_stage(k, *fn);
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (--pending_ == 0) cv_done_.notify_all();
    }
  }
}

double measure_speedup(double serial_wall_seconds, double parallel_wall_seconds) {
  if (serial_wall_seconds <= 0.0 || parallel_wall_seconds <= 0.0) {
    throw std::invalid_argument("measure_speedup: durations must be positive");
  }
  return serial_wall_seconds / parallel_wall_seconds;
}

int resolve_worker_count(int configured, int stages) {
  int count = configured;
  if (const char* env = std::getenv("RESPAR_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw std::invalid_argument("RESPAR_WORKERS must be a positive integer, got '" +
                                  std::string(env) + "'");
    }
    count = static_cast<int>(v);
  }
  if (count <= 0) count = stages;
  return std::clamp(count, 1, std::max(stages, 1));
}

}  // namespace respar
