#include "taskgp/runtime/runtime.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <random>
#include <string_view>
#include <thread>

namespace taskgp::rt {

namespace {

using detail::state_ptr;

class scheduler
{
  public:
    explicit scheduler(std::size_t workers)
    {
        workers_.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i)
            workers_.push_back(std::make_unique<worker>(i));
        threads_.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i)
            threads_.emplace_back([this, i] { worker_loop(i); });
    }

    scheduler(const scheduler &) = delete;
    scheduler &operator=(const scheduler &) = delete;

    ~scheduler() { shutdown(); }

    std::size_t size() const noexcept { return workers_.size(); }

    void task_created() noexcept { outstanding_.fetch_add(1, std::memory_order_relaxed); }

    void task_finished()
    {
        if (outstanding_.fetch_sub(1, std::memory_order_acq_rel) == 1)
        {
            std::lock_guard lk(drain_mutex_);
            drain_cv_.notify_all();
        }
    }

    void schedule(state_ptr node);

    bool try_run_one(std::size_t index);

    void drain()
    {
        std::unique_lock lk(drain_mutex_);
        drain_cv_.wait(lk, [this] { return outstanding_.load(std::memory_order_acquire) == 0; });
    }

    void shutdown()
    {
        if (threads_.empty())
            return;
        stop_.store(true);
        {
            std::lock_guard lk(idle_mutex_);
        }
        idle_cv_.notify_all();
        for (auto &t : threads_)
            t.join();
        threads_.clear();
    }

    std::vector<std::uint64_t> executed_counts() const
    {
        std::vector<std::uint64_t> out;
        out.reserve(workers_.size());
        for (const auto &w : workers_)
            out.push_back(w->executed.load(std::memory_order_relaxed));
        return out;
    }

  private:
    struct worker
    {
        explicit worker(std::size_t index) : rng(static_cast<std::uint32_t>(index + 1)) { }

        std::mutex mutex;
        std::deque<state_ptr> queue;
        std::atomic<std::uint64_t> executed{ 0 };
        std::minstd_rand rng;
    };

    void worker_loop(std::size_t index);
    void run(std::size_t index, state_ptr node);
    void notify_one_sleeper();

    std::vector<std::unique_ptr<worker>> workers_;
    std::vector<std::thread> threads_;

    std::mutex inject_mutex_;
    std::deque<state_ptr> inject_;

    // Upper bound on queued-but-unclaimed tasks: incremented before a push,
    // decremented after a successful pop.
    std::atomic<std::size_t> queued_{ 0 };
    std::atomic<std::size_t> sleepers_{ 0 };
    std::atomic<bool> stop_{ false };
    std::mutex idle_mutex_;
    std::condition_variable idle_cv_;

    std::atomic<std::size_t> outstanding_{ 0 };
    std::mutex drain_mutex_;
    std::condition_variable drain_cv_;
};

thread_local scheduler *tl_scheduler = nullptr;
thread_local std::size_t tl_index = 0;

std::mutex g_control_mutex;
std::atomic<scheduler *> g_scheduler{ nullptr };
std::unique_ptr<scheduler> g_owner;
std::atomic<lifecycle> g_state{ lifecycle::stopped };

void scheduler::notify_one_sleeper()
{
    if (sleepers_.load() > 0)
    {
        {
            std::lock_guard lk(idle_mutex_);
        }
        idle_cv_.notify_one();
    }
}

void scheduler::schedule(state_ptr node)
{
    queued_.fetch_add(1);
    if (tl_scheduler == this)
    {
        auto &w = *workers_[tl_index];
        std::lock_guard lk(w.mutex);
        w.queue.push_back(std::move(node));
    }
    else
    {
        std::lock_guard lk(inject_mutex_);
        inject_.push_back(std::move(node));
    }
    notify_one_sleeper();
}

bool scheduler::try_run_one(std::size_t index)
{
    state_ptr node;
    {
        auto &self = *workers_[index];
        std::lock_guard lk(self.mutex);
        if (!self.queue.empty())
        {
            node = std::move(self.queue.back());
            self.queue.pop_back();
        }
    }
    if (!node)
    {
        std::lock_guard lk(inject_mutex_);
        if (!inject_.empty())
        {
            node = std::move(inject_.front());
            inject_.pop_front();
        }
    }
    if (!node && workers_.size() > 1)
    {
        auto &self = *workers_[index];
        std::size_t const n = workers_.size();
        std::size_t const start = std::uniform_int_distribution<std::size_t>(0, n - 1)(self.rng);
        for (std::size_t k = 0; k < n && !node; ++k)
        {
            std::size_t const victim = (start + k) % n;
            if (victim == index)
                continue;
            auto &v = *workers_[victim];
            std::lock_guard lk(v.mutex);
            if (!v.queue.empty())
            {
                node = std::move(v.queue.front());
                v.queue.pop_front();
            }
        }
    }
    if (!node)
        return false;
    queued_.fetch_sub(1);
    run(index, std::move(node));
    return true;
}

void scheduler::run(std::size_t index, state_ptr node)
{
    node->execute();
    workers_[index]->executed.fetch_add(1, std::memory_order_relaxed);
}

void scheduler::worker_loop(std::size_t index)
{
    tl_scheduler = this;
    tl_index = index;
    for (;;)
    {
        if (try_run_one(index))
            continue;

        for (int spin = 0; spin < 32 && queued_.load() == 0 && !stop_.load(); ++spin)
            std::this_thread::yield();
        if (try_run_one(index))
            continue;

        std::unique_lock lk(idle_mutex_);
        sleepers_.fetch_add(1);
        idle_cv_.wait(lk, [this] { return queued_.load() > 0 || stop_.load(); });
        sleepers_.fetch_sub(1);
        if (stop_.load() && queued_.load() == 0)
            break;
    }
    tl_scheduler = nullptr;
}

std::size_t parse_worker_count(std::string_view text)
{
    std::size_t value = 0;
    auto const *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || value < 1)
        throw invalid_config("TASKGP_WORKERS must be a positive integer, got '" + std::string(text) + "'");
    return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// task states

namespace detail {

void state_base::mark_ready_without_body()
{
    ready_.store(true, std::memory_order_release);
}

void state_base::complete(std::exception_ptr err)
{
    std::vector<state_ptr> successors;
    {
        std::lock_guard lk(mutex_);
        error_ = std::move(err);
        ready_.store(true, std::memory_order_release);
        successors.swap(successors_);
    }
    cv_.notify_all();

    auto *sched = g_scheduler.load(std::memory_order_acquire);
    for (auto &s : successors)
        if (s->pending_.fetch_sub(1, std::memory_order_acq_rel) == 1)
            sched->schedule(std::move(s));
}

void state_base::execute()
{
    std::exception_ptr err;
    for (const auto &d : dependencies_)
    {
        if (d->error_)
        {
            err = d->error_;
            break;
        }
    }
    if (!err)
    {
        try
        {
            run_body();
        }
        catch (...)
        {
            err = std::current_exception();
        }
    }
    dependencies_.clear();
    complete(std::move(err));
    g_scheduler.load(std::memory_order_acquire)->task_finished();
}

void state_base::wait() const
{
    if (ready())
        return;

    if (auto *sched = tl_scheduler; sched != nullptr)
    {
        std::size_t const index = tl_index;
        while (!ready())
        {
            if (sched->try_run_one(index))
                continue;
            std::unique_lock lk(mutex_);
            cv_.wait_for(lk, std::chrono::microseconds(200), [this] { return ready(); });
        }
        return;
    }

    std::unique_lock lk(mutex_);
    cv_.wait(lk, [this] { return ready(); });
}

void register_task(const state_ptr &node, std::span<const state_ptr> deps)
{
    auto *sched = g_scheduler.load(std::memory_order_acquire);
    if (sched == nullptr)
        throw not_running();

    sched->task_created();
    node->dependencies_.assign(deps.begin(), deps.end());
    node->pending_.store(deps.size() + 1, std::memory_order_relaxed);

    std::size_t already_done = 0;
    for (const auto &d : deps)
    {
        std::lock_guard lk(d->mutex_);
        if (d->ready())
            ++already_done;
        else
            d->successors_.push_back(node);
    }
    if (node->pending_.fetch_sub(already_done + 1, std::memory_order_acq_rel) == already_done + 1)
        sched->schedule(node);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// lifecycle

std::size_t resolve_worker_count(const runtime_config &config)
{
    if (config.worker_count)
    {
        if (*config.worker_count < 1)
            throw invalid_config("worker_count must be at least 1");
        return *config.worker_count;
    }
    if (const char *env = std::getenv("TASKGP_WORKERS"); env != nullptr && *env != '\0')
        return parse_worker_count(env);
    return std::max(1u, std::thread::hardware_concurrency());
}

void start_runtime(const runtime_config &config)
{
    std::lock_guard lk(g_control_mutex);
    if (g_state.load() != lifecycle::stopped)
        throw already_running();

    std::size_t const workers = resolve_worker_count(config);
    g_owner = std::make_unique<scheduler>(workers);
    g_scheduler.store(g_owner.get(), std::memory_order_release);
    g_state.store(lifecycle::running);
}

void stop_runtime()
{
    std::lock_guard lk(g_control_mutex);
    if (g_state.load() != lifecycle::running)
        throw not_running();

    g_state.store(lifecycle::draining);
    g_owner->drain();
    g_owner->shutdown();
    g_scheduler.store(nullptr, std::memory_order_release);
    g_owner.reset();
    g_state.store(lifecycle::stopped);
}

lifecycle state() noexcept
{
    return g_state.load();
}

std::size_t worker_count()
{
    auto *sched = g_scheduler.load(std::memory_order_acquire);
    if (sched == nullptr)
        throw not_running();
    return sched->size();
}

std::optional<std::size_t> this_worker() noexcept
{
    if (tl_scheduler != nullptr && tl_scheduler == g_scheduler.load(std::memory_order_acquire))
        return tl_index;
    return std::nullopt;
}

std::vector<std::uint64_t> worker_task_counts()
{
    auto *sched = g_scheduler.load(std::memory_order_acquire);
    if (sched == nullptr)
        throw not_running();
    return sched->executed_counts();
}

}  // namespace taskgp::rt
