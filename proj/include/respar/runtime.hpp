#ifndef RESPAR_RUNTIME_HPP
#define RESPAR_RUNTIME_HPP

#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace respar {

struct StageError : std::runtime_error {
  int stage;
  StageError(int stage_index, const std::string& what)
      : std::runtime_error("stage " + std::to_string(stage_index) + ": " + what),
        stage(stage_index) {}
};

struct EpochTiming {
  int epoch = 0;
  double train_wall_seconds = 0.0;
  std::vector<double> stage_busy_seconds;
};

// Long-lived workers, one iteration at a time: every stage body finishes
// before run_iteration returns, so the caller's correction sweep never sees a
// stage output from another iteration. Stage k runs on worker k % workers and
// each worker walks its stages in ascending order; per-stage arithmetic is
// self-contained, so results do not depend on the worker count.
class StagePool {
 public:
  StagePool(int num_stages, int num_workers);
  ~StagePool();

  StagePool(const StagePool&) = delete;
  StagePool& operator=(const StagePool&) = delete;

  // Runs fn(k) for k = 0..num_stages-1; rethrows the first failure (lowest
  // stage index) as StageError after the iteration has drained.
  void run_iteration(const std::function<void(int)>& fn);

  int stages() const { return num_stages_; }
  int workers() const { return num_workers_; }
  long generation() const { return generation_; }
  // Wall seconds each stage spent inside fn during the last iteration.
  const std::vector<double>& busy_seconds() const { return busy_; }

 private:
  void worker_loop(int w);
  void run_stage(int k, const std::function<void(int)>& fn);

  int num_stages_;
  int num_workers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  const std::function<void(int)>* fn_ = nullptr;
  long generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
  std::vector<double> busy_;
  std::vector<std::pair<int, std::exception_ptr>> failures_;
};

// serial wall / parallel wall; both must be positive.
double measure_speedup(double serial_wall_seconds, double parallel_wall_seconds);

// RESPAR_WORKERS beats the configured count; configured <= 0 means one worker
// per stage. Result is clamped to [1, stages].
int resolve_worker_count(int configured, int stages);

}  // namespace respar

#endif  // RESPAR_RUNTIME_HPP
