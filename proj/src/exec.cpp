#include "bandsvd/exec.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace bandsvd::exec {

struct GroupRuntime {
  const LaunchSpec& spec;
  std::size_t group;
  std::byte* shared;
  RaceChecker* checker;
};

namespace {

constexpr std::size_t kAlign = alignof(std::max_align_t);

std::size_t round_up(std::size_t v, std::size_t a) { return (v + a - 1) / a * a; }

std::string site_string(const std::source_location& s) {
  std::string file = s.file_name();
  if (auto slash = file.find_last_of('/'); slash != std::string::npos) file = file.substr(slash + 1);
  return file + ":" + std::to_string(s.line());
}

bool same_site(const std::source_location& a, const std::source_location& b) {
  return a.line() == b.line() && a.column() == b.column() &&
         std::string_view(a.file_name()) == std::string_view(b.file_name());
}

}  // namespace

// ---------------------------------------------------------------------------
// RaceChecker

void RaceChecker::reset(std::string_view kernel, std::size_t group, std::size_t bytes) {
  kernel_ = kernel;
  group_ = group;
  epoch_ = 1;
  traffic_ = 0;
  shadow_.assign(bytes, Shadow{});
}

void RaceChecker::on_read(std::size_t offset, std::size_t item) {
  Shadow& s = shadow_[offset];
  const auto me = static_cast<std::uint32_t>(item);
  if (s.write_epoch == epoch_ && s.writer != me) report(offset, s.writer, "write", item, "read");
  if (s.read_epoch != epoch_) {
    s.read_epoch = epoch_;
    s.reader = me;
  } else if (s.reader != me) {
    s.reader = kManyReaders;
  }
}

void RaceChecker::on_write(std::size_t offset, std::size_t item) {
  Shadow& s = shadow_[offset];
  const auto me = static_cast<std::uint32_t>(item);
  if (s.write_epoch == epoch_ && s.writer != me) report(offset, s.writer, "write", item, "write");
  if (s.read_epoch == epoch_ && s.reader != me) {
    if (s.reader == kManyReaders) {
      throw RaceError("local-memory race in kernel '" + kernel_ + "' group " +
                      std::to_string(group_) + ": work-item " + std::to_string(item) +
                      " wrote byte offset " + std::to_string(offset) +
                      " after several other work-items read it in barrier interval " +
                      std::to_string(epoch_));
    }
    report(offset, s.reader, "read", item, "write");
  }
  s.write_epoch = epoch_;
  s.writer = me;
}

void RaceChecker::report(std::size_t offset, std::size_t first, const char* first_kind,
                         std::size_t second, const char* second_kind) const {
  throw RaceError("local-memory race in kernel '" + kernel_ + "' group " +
                  std::to_string(group_) + ": work-item " + std::to_string(first) + " " +
                  first_kind + " and work-item " + std::to_string(second) + " " + second_kind +
                  " at byte offset " + std::to_string(offset) + " in barrier interval " +
                  std::to_string(epoch_));
}

// ---------------------------------------------------------------------------
// KernelContext

KernelContext::KernelContext(GroupRuntime& group, std::size_t local_id, std::byte* private_mem)
    : group_(&group), local_id_(local_id), private_mem_(private_mem) {}

std::size_t KernelContext::group_id() const { return group_->group; }
std::size_t KernelContext::num_groups() const { return group_->spec.num_groups; }
std::size_t KernelContext::group_size() const { return group_->spec.group_size; }
std::byte* KernelContext::shared_base() const { return group_->shared; }
std::size_t KernelContext::shared_capacity() const { return group_->spec.shared_bytes; }
std::size_t KernelContext::private_capacity() const { return group_->spec.private_bytes; }
RaceChecker* KernelContext::checker() const { return group_->checker; }

std::size_t KernelContext::reserve(std::size_t& cursor, std::size_t align, std::size_t bytes,
                                   std::size_t capacity, const char* what) {
  const std::size_t offset = round_up(cursor, align);
  if (offset + bytes > capacity) {
    throw ExecError("kernel '" + std::string(group_->spec.name) + "' requests " +
                    std::to_string(offset + bytes) + " bytes of " + what +
                    " memory but its launch declares " + std::to_string(capacity));
  }
  cursor = offset + bytes;
  return offset;
}

// ---------------------------------------------------------------------------
// Group execution

void validate(const LaunchSpec& spec) {
  if (spec.group_size == 0 || spec.group_size > kMaxGroupSize) {
    throw ExecError("kernel '" + std::string(spec.name) + "': group size " +
                    std::to_string(spec.group_size) + " outside [1, " +
                    std::to_string(kMaxGroupSize) + "]");
  }
}

void run_group(const Kernel& kernel, const LaunchSpec& spec, std::size_t group,
               GroupScratch& scratch, bool check, LaunchStats& stats) {
  const std::size_t n = spec.group_size;
  const std::size_t private_stride = round_up(spec.private_bytes, kAlign);
  scratch.shared.assign(round_up(spec.shared_bytes, kAlign) + kAlign, std::byte{0});
  scratch.priv.assign(private_stride * n + kAlign, std::byte{0});
  auto aligned = [](std::vector<std::byte>& buf) {
    void* p = buf.data();
    std::size_t space = buf.size();
    return static_cast<std::byte*>(std::align(kAlign, 1, p, space));
  };
  std::byte* shared = aligned(scratch.shared);
  std::byte* priv = aligned(scratch.priv);

  RaceChecker* checker = nullptr;
  if (check) {
    scratch.checker.reset(spec.name, group, spec.shared_bytes);
    checker = &scratch.checker;
  }

  GroupRuntime rt{spec, group, shared, checker};
  std::vector<KernelContext> ctx;
  ctx.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ctx.emplace_back(rt, i, priv + i * private_stride);
  std::vector<ItemTask> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) items.push_back(kernel(ctx[i]));

  for (;;) {
    std::size_t finished = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (items[i].done()) {
        ++finished;
        continue;
      }
      ctx[i].release();
      items[i].resume();
      if (items[i].done()) ++finished;
    }
    if (finished == n) break;

    // Everyone still running must be parked on one and the same barrier.
    std::size_t first_waiting = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!items[i].done()) {
        first_waiting = i;
        break;
      }
    }
    const auto& site = ctx[first_waiting].wait_site();
    for (std::size_t i = 0; i < n; ++i) {
      if (items[i].done()) {
        throw BarrierDivergenceError(
            "barrier divergence in kernel '" + std::string(spec.name) + "' group " +
            std::to_string(group) + ": work-item " + std::to_string(i) +
            " finished while work-item " + std::to_string(first_waiting) + " waits at " +
            site_string(site));
      }
      if (!same_site(ctx[i].wait_site(), site)) {
        throw BarrierDivergenceError(
            "barrier divergence in kernel '" + std::string(spec.name) + "' group " +
            std::to_string(group) + ": work-item " + std::to_string(first_waiting) +
            " waits at " + site_string(site) + " but work-item " + std::to_string(i) +
            " waits at " + site_string(ctx[i].wait_site()));
      }
    }
    ++stats.barriers;
    if (checker) checker->next_interval();
  }
  if (checker) stats.shared_traffic += checker->traffic();
}

// ---------------------------------------------------------------------------
// Backends

std::string_view to_string(BackendKind k) {
  return k == BackendKind::reference ? "reference" : "parallel";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "reference") return BackendKind::reference;
  if (name == "parallel") return BackendKind::parallel;
  throw ConfigError("unknown backend '" + std::string(name) + "'");
}

LaunchStats Backend::launch(const LaunchSpec& spec, const Kernel& kernel) {
  validate(spec);
  LaunchStats delta;
  delta.launches = 1;
  run(spec, kernel, delta);
  stats_ += delta;
  return delta;
}

void ReferenceBackend::run(const LaunchSpec& spec, const Kernel& kernel, LaunchStats& delta) {
  std::vector<std::size_t> order(spec.num_groups);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options_.shuffle_groups) {
    std::mt19937_64 rng(*options_.shuffle_groups);
    std::shuffle(order.begin(), order.end(), rng);
  }
  for (std::size_t g : order) run_group(kernel, spec, g, scratch_, options_.check_races, delta);
}

class ParallelBackend::Pool {
 public:
  explicit Pool(std::size_t helpers) : scratch_(helpers + 1) {
    threads_.reserve(helpers);
    for (std::size_t i = 0; i < helpers; ++i) {
      threads_.emplace_back([this, i] { worker(i + 1); });
    }
  }

  ~Pool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(const LaunchSpec& spec, const Kernel& kernel, LaunchStats& delta) {
    if (threads_.empty() || spec.num_groups <= 1) {
      for (std::size_t g = 0; g < spec.num_groups; ++g) {
        run_group(kernel, spec, g, scratch_[0], false, delta);
      }
      return;
    }
    Job job;
    job.spec = &spec;
    job.kernel = &kernel;
    {
      std::lock_guard lock(mutex_);
      job_ = &job;
      active_ = threads_.size();
      ++generation_;
    }
    wake_.notify_all();
    work(job, 0);
    {
      std::unique_lock lock(mutex_);
      done_.wait(lock, [this] { return active_ == 0; });
      job_ = nullptr;
    }
    if (job.error) std::rethrow_exception(job.error);
    delta.barriers += job.barriers.load();
  }

 private:
  struct Job {
    const LaunchSpec* spec = nullptr;
    const Kernel* kernel = nullptr;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::atomic<std::uint64_t> barriers{0};
    std::mutex error_mutex;
    std::exception_ptr error;
  };

  void work(Job& job, std::size_t slot) {
    LaunchStats local;
    for (;;) {
      if (job.failed.load(std::memory_order_relaxed)) break;
      const std::size_t g = job.next.fetch_add(1, std::memory_order_relaxed);
      if (g >= job.spec->num_groups) break;
      try {
        run_group(*job.kernel, *job.spec, g, scratch_[slot], false, local);
      } catch (...) {
        std::lock_guard lock(job.error_mutex);
        if (!job.error) job.error = std::current_exception();
        job.failed = true;
      }
    }
    job.barriers += local.barriers;
  }

  void worker(std::size_t slot) {
    std::uint64_t seen = 0;
    for (;;) {
      Job* job = nullptr;
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
      }
      work(*job, slot);
      {
        std::lock_guard lock(mutex_);
        if (--active_ == 0) done_.notify_one();
      }
    }
  }

  std::vector<GroupScratch> scratch_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  Job* job_ = nullptr;
  std::size_t active_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

ParallelBackend::ParallelBackend(std::size_t workers) : workers_(workers) {
  if (workers == 0) throw ConfigError("worker count must be positive");
  pool_ = std::make_unique<Pool>(workers - 1);
}

ParallelBackend::~ParallelBackend() = default;

void ParallelBackend::run(const LaunchSpec& spec, const Kernel& kernel, LaunchStats& delta) {
  pool_->run(spec, kernel, delta);
}

std::size_t default_worker_count() {
  if (const char* env = std::getenv("BANDSVD_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::unique_ptr<Backend> make_backend(BackendKind kind, std::size_t workers) {
  if (kind == BackendKind::reference) return std::make_unique<ReferenceBackend>();
  return std::make_unique<ParallelBackend>(workers == 0 ? default_worker_count() : workers);
}

}  // namespace bandsvd::exec
