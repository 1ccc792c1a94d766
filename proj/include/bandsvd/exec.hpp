#ifndef BANDSVD_EXEC_HPP
#define BANDSVD_EXEC_HPP

// Abstract data-parallel execution model.
//
// A kernel is a coroutine run once per work-item. Work-items of a group
// share local memory and synchronize with `co_await ctx.barrier()`. Between
// two barriers the backends execute the items of a group one after another in
// ascending local_id order, so every schedule (and every floating-point
// reduction order) is fixed by the kernel alone. Groups are independent and
// must write disjoint data.

#include <coroutine>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <source_location>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bandsvd/errors.hpp"

namespace bandsvd::exec {

inline constexpr std::size_t kMaxGroupSize = 1024;

/// Execution-model contract violation (bad launch, barrier divergence, race).
class ExecError : public Error {
 public:
  using Error::Error;
};

class BarrierDivergenceError : public ExecError {
 public:
  using ExecError::ExecError;
};

class RaceError : public ExecError {
 public:
  using ExecError::ExecError;
};

struct LaunchSpec {
  std::string_view name = "kernel";
  std::size_t num_groups = 1;
  std::size_t group_size = 1;
  std::size_t shared_bytes = 0;   // workgroup-local memory
  std::size_t private_bytes = 0;  // per work-item scratch
};

struct LaunchStats {
  std::uint64_t launches = 0;
  std::uint64_t barriers = 0;
  std::uint64_t shared_traffic = 0;  // bytes; counted by the reference backend only

  LaunchStats& operator+=(const LaunchStats& o) {
    launches += o.launches;
    barriers += o.barriers;
    shared_traffic += o.shared_traffic;
    return *this;
  }
  friend LaunchStats operator-(LaunchStats a, const LaunchStats& b) {
    a.launches -= b.launches;
    a.barriers -= b.barriers;
    a.shared_traffic -= b.shared_traffic;
    return a;
  }
  friend bool operator==(const LaunchStats&, const LaunchStats&) = default;
};

/// Coroutine handle type returned by kernel bodies.
class ItemTask {
 public:
  struct promise_type {
    std::exception_ptr error;

    ItemTask get_return_object() {
      return ItemTask(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    void return_void() noexcept {}
    void unhandled_exception() noexcept { error = std::current_exception(); }
  };

  ItemTask() = default;
  explicit ItemTask(std::coroutine_handle<promise_type> h) : handle_(h) {}
  ItemTask(ItemTask&& o) noexcept : handle_(std::exchange(o.handle_, {})) {}
  ItemTask& operator=(ItemTask&& o) noexcept {
    if (this != &o) {
      reset();
      handle_ = std::exchange(o.handle_, {});
    }
    return *this;
  }
  ItemTask(const ItemTask&) = delete;
  ItemTask& operator=(const ItemTask&) = delete;
  ~ItemTask() { reset(); }

  bool done() const { return !handle_ || handle_.done(); }

  /// Runs the item up to its next barrier (or to completion).
  void resume() {
    handle_.resume();
    if (handle_.done() && handle_.promise().error) {
      std::rethrow_exception(handle_.promise().error);
    }
  }

 private:
  void reset() {
    if (handle_) handle_.destroy();
    handle_ = {};
  }
  std::coroutine_handle<promise_type> handle_;
};

// Shadow state for one group's local memory. Flags any location that one
// work-item writes and another reads or writes inside the same barrier
// interval.
class RaceChecker {
 public:
  void reset(std::string_view kernel, std::size_t group, std::size_t bytes);
  void next_interval() { ++epoch_; }
  void on_read(std::size_t offset, std::size_t item);
  void on_write(std::size_t offset, std::size_t item);
  std::uint64_t traffic() const { return traffic_; }
  void add_traffic(std::size_t bytes) { traffic_ += bytes; }

 private:
  struct Shadow {
    std::uint32_t write_epoch = 0;
    std::uint32_t writer = 0;
    std::uint32_t read_epoch = 0;
    std::uint32_t reader = 0;
  };
  static constexpr std::uint32_t kManyReaders = 0xffffffffu;

  [[noreturn]] void report(std::size_t offset, std::size_t first, const char* first_kind,
                           std::size_t second, const char* second_kind) const;

  std::string kernel_;
  std::size_t group_ = 0;
  std::uint32_t epoch_ = 1;
  std::uint64_t traffic_ = 0;
  std::vector<Shadow> shadow_;
};

/// Typed window onto workgroup-local memory.
template <typename T>
class LocalArray {
 public:
  LocalArray(T* data, std::size_t count, std::size_t byte_offset, RaceChecker* checker,
             std::size_t item)
      : data_(data), count_(count), offset_(byte_offset), checker_(checker), item_(item) {}

  std::size_t size() const { return count_; }

  T load(std::size_t i) const {
    if (checker_) [[unlikely]] {
      bounds(i, 1);
      checker_->on_read(offset_ + i * sizeof(T), item_);
      checker_->add_traffic(sizeof(T));
    }
    return data_[i];
  }

  void store(std::size_t i, T v) const {
    if (checker_) [[unlikely]] {
      bounds(i, 1);
      checker_->on_write(offset_ + i * sizeof(T), item_);
      checker_->add_traffic(sizeof(T));
    }
    data_[i] = v;
  }

  /// Read-only span over [first, first + n); each element counts as read.
  std::span<const T> read(std::size_t first, std::size_t n) const {
    if (checker_) [[unlikely]] {
      bounds(first, n);
      for (std::size_t i = first; i < first + n; ++i) {
        checker_->on_read(offset_ + i * sizeof(T), item_);
      }
      checker_->add_traffic(n * sizeof(T));
    }
    return {data_ + first, n};
  }

 private:
  void bounds(std::size_t first, std::size_t n) const {
    if (first + n > count_) {
      throw ExecError("local memory access [" + std::to_string(first) + ", " +
                      std::to_string(first + n) + ") outside an array of " +
                      std::to_string(count_));
    }
  }

  T* data_;
  std::size_t count_;
  std::size_t offset_;
  RaceChecker* checker_;
  std::size_t item_;
};

struct GroupRuntime;

/// What a work-item sees: its indices, its memories and the group barrier.
class KernelContext {
 public:
  KernelContext(GroupRuntime& group, std::size_t local_id, std::byte* private_mem);

  std::size_t group_id() const;
  std::size_t num_groups() const;
  std::size_t local_id() const { return local_id_; }
  std::size_t group_size() const;

  /// Carves the next `count` elements out of the group's local memory. Every
  /// work-item must request the same arrays in the same order.
  template <typename T>
  LocalArray<T> local(std::size_t count) {
    const std::size_t offset = reserve(local_cursor_, alignof(T), count * sizeof(T),
                                       shared_capacity(), "local");
    return LocalArray<T>(reinterpret_cast<T*>(shared_base() + offset), count, offset, checker(),
                         local_id_);
  }

  /// Carves the next `count` elements out of this work-item's private memory.
  template <typename T>
  std::span<T> private_array(std::size_t count) {
    const std::size_t offset = reserve(private_cursor_, alignof(T), count * sizeof(T),
                                       private_capacity(), "private");
    return {reinterpret_cast<T*>(private_mem_ + offset), count};
  }

  struct BarrierAwaiter {
    KernelContext& ctx;
    std::source_location site;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<>) noexcept {
      ctx.waiting_ = true;
      ctx.wait_site_ = site;
    }
    void await_resume() const noexcept {}
  };

  /// Group-wide rendezvous. All work-items must reach the same barrier.
  BarrierAwaiter barrier(std::source_location site = std::source_location::current()) {
    return BarrierAwaiter{*this, site};
  }

  // Scheduler side.
  bool waiting() const { return waiting_; }
  const std::source_location& wait_site() const { return wait_site_; }
  void release() { waiting_ = false; }

 private:
  std::size_t reserve(std::size_t& cursor, std::size_t align, std::size_t bytes,
                      std::size_t capacity, const char* what);
  std::byte* shared_base() const;
  std::size_t shared_capacity() const;
  std::size_t private_capacity() const;
  RaceChecker* checker() const;

  GroupRuntime* group_;
  std::size_t local_id_;
  std::byte* private_mem_;
  std::size_t local_cursor_ = 0;
  std::size_t private_cursor_ = 0;
  bool waiting_ = false;
  std::source_location wait_site_{};
};

using Kernel = std::function<ItemTask(KernelContext&)>;

// Reusable per-worker buffers for running groups.
struct GroupScratch {
  std::vector<std::byte> shared;
  std::vector<std::byte> priv;
  RaceChecker checker;
};

/// Runs one group to completion with the lockstep schedule. Shared by every
/// backend so that per-group arithmetic is identical across them.
void run_group(const Kernel& kernel, const LaunchSpec& spec, std::size_t group,
               GroupScratch& scratch, bool check, LaunchStats& stats);

void validate(const LaunchSpec& spec);

enum class BackendKind { reference, parallel };

std::string_view to_string(BackendKind k);
BackendKind parse_backend(std::string_view name);

class Backend {
 public:
  virtual ~Backend() = default;

  /// Synchronous launch: every write made by the kernel is visible on return.
  LaunchStats launch(const LaunchSpec& spec, const Kernel& kernel);

  LaunchStats stats() const { return stats_; }
  virtual BackendKind kind() const = 0;
  virtual std::size_t workers() const = 0;

 protected:
  virtual void run(const LaunchSpec& spec, const Kernel& kernel, LaunchStats& delta) = 0;

 private:
  LaunchStats stats_;
};

struct ReferenceOptions {
  bool check_races = true;
  /// When set, groups run in a shuffled (but still serial) order.
  std::optional<std::uint64_t> shuffle_groups;
};

/// Deterministic single-threaded interpreter with race and barrier checking.
class ReferenceBackend final : public Backend {
 public:
  explicit ReferenceBackend(ReferenceOptions options = {}) : options_(options) {}
  BackendKind kind() const override { return BackendKind::reference; }
  std::size_t workers() const override { return 1; }

 protected:
  void run(const LaunchSpec& spec, const Kernel& kernel, LaunchStats& delta) override;

 private:
  ReferenceOptions options_;
  GroupScratch scratch_;
};

/// Distributes groups over a pool of worker threads. Within a group the
/// schedule is the reference one, so results are bitwise identical.
class ParallelBackend final : public Backend {
 public:
  explicit ParallelBackend(std::size_t workers);
  ~ParallelBackend() override;
  BackendKind kind() const override { return BackendKind::parallel; }
  std::size_t workers() const override { return workers_; }

 protected:
  void run(const LaunchSpec& spec, const Kernel& kernel, LaunchStats& delta) override;

 private:
  class Pool;
  std::size_t workers_;
  std::unique_ptr<Pool> pool_;
};

/// BANDSVD_WORKERS if set to a positive integer, else the hardware thread count.
std::size_t default_worker_count();

std::unique_ptr<Backend> make_backend(BackendKind kind, std::size_t workers = 0);

}  // namespace bandsvd::exec

#endif  // BANDSVD_EXEC_HPP
