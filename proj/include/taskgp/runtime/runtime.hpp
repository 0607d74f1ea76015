#ifndef TASKGP_RUNTIME_RUNTIME_HPP
#define TASKGP_RUNTIME_RUNTIME_HPP

#pragma once

// Dataflow task runtime.
//
// A fixed pool of worker threads executes a dynamically built DAG of tasks.
// Each worker owns a deque: it pops its own work LIFO, idle workers steal
// FIFO from a randomly chosen victim. Tasks submitted from threads outside
// the pool go through a shared injection queue.
//
// Only one runtime may be live per process. The typical host-side sequence is
//
//     rt::start_runtime({.worker_count = 4});
//     auto y = rt::run_as_root([&] { return model.predict(test); });
//     rt::stop_runtime();
//
// stop_runtime() drains every submitted task, awaited or not, before joining.

#include "taskgp/error.hpp"

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace taskgp::rt {

struct runtime_config
{
    /// OS threads to dedicate. When empty, TASKGP_WORKERS is consulted and
    /// then std::thread::hardware_concurrency().
    std::optional<std::size_t> worker_count;
    /// Accepted for interface parity with argv-style runtimes; not interpreted.
    std::vector<std::string> extra_args;
};

enum class lifecycle
{
    stopped,
    running,
    draining
};

void start_runtime(const runtime_config &config = {});

/// Blocks until every submitted task has executed and all workers have exited.
void stop_runtime();

lifecycle state() noexcept;

std::size_t worker_count();

/// Index of the calling pool worker, or nullopt for external threads.
std::optional<std::size_t> this_worker() noexcept;

/// Tasks executed by each worker since the runtime started.
std::vector<std::uint64_t> worker_task_counts();

/// Worker count that start_runtime would pick for `config`.
std::size_t resolve_worker_count(const runtime_config &config);

namespace detail {

class state_base;
using state_ptr = std::shared_ptr<state_base>;

/// Shared completion state of one task. Ready states are immutable.
class state_base
{
  public:
    state_base() = default;
    state_base(const state_base &) = delete;
    state_base &operator=(const state_base &) = delete;
    virtual ~state_base() = default;

    bool ready() const noexcept { return ready_.load(std::memory_order_acquire); }

    /// Blocks until ready. Pool workers execute other tasks while waiting.
    void wait() const;

    void rethrow_if_failed() const
    {
        if (error_)
            std::rethrow_exception(error_);
    }

    /// Runs the body unless a dependency failed, then releases successors.
    void execute();

  protected:
    virtual void run_body() = 0;

    void mark_ready_without_body();

  private:
    friend void register_task(const state_ptr &, std::span<const state_ptr>);

    void complete(std::exception_ptr err);

    std::atomic<bool> ready_{ false };
    std::exception_ptr error_;
    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::vector<state_ptr> successors_;
    std::vector<state_ptr> dependencies_;
    std::atomic<std::size_t> pending_{ 0 };
};

/// Schedules `node` once every state in `deps` is ready.
/// Throws not_running when no runtime is live.
void register_task(const state_ptr &node, std::span<const state_ptr> deps);

template <typename T>
using storage_t = std::conditional_t<std::is_void_v<T>, std::monostate, T>;

template <typename T>
class value_state : public state_base
{
  public:
    value_state() = default;

    explicit value_state(storage_t<T> v) : value_(std::move(v)) { mark_ready_without_body(); }

    const storage_t<T> &value() const { return *value_; }

  protected:
    void run_body() override { }

    std::optional<storage_t<T>> value_;
};

template <typename T, typename F>
class task_state final : public value_state<T>
{
  public:
    explicit task_state(F fn) : fn_(std::move(fn)) { }

  protected:
    void run_body() override
    {
        if constexpr (std::is_void_v<T>)
        {
            std::invoke(*fn_);
            this->value_.emplace();
        }
        else
        {
            this->value_.emplace(std::invoke(*fn_));
        }
        fn_.reset();
    }

  private:
    std::optional<F> fn_;
};

}  // namespace detail

/// Type-erased completion handle, used to express dependencies.
class any_future
{
  public:
    any_future() = default;
    explicit any_future(detail::state_ptr s) : state_(std::move(s)) { }

    bool valid() const noexcept { return state_ != nullptr; }
    bool is_ready() const noexcept { return state_ && state_->ready(); }

    void wait() const { state_->wait(); }

    const detail::state_ptr &state() const noexcept { return state_; }

  private:
    detail::state_ptr state_;
};

/// Completion handle for a value of type T produced by a task.
///
/// Copies share the same state. get() may be called any number of times and
/// from any thread; it rethrows the error of a failed task.
template <typename T>
class future
{
  public:
    using value_type = T;

    future() = default;
    explicit future(std::shared_ptr<detail::value_state<T>> s) : state_(std::move(s)) { }

    bool valid() const noexcept { return state_ != nullptr; }
    bool is_ready() const noexcept { return state_ && state_->ready(); }

    void wait() const { state_->wait(); }

    decltype(auto) get() const
    {
        state_->wait();
        state_->rethrow_if_failed();
        if constexpr (!std::is_void_v<T>)
            return static_cast<const T &>(state_->value());
    }

    operator any_future() const { return any_future(state_); }

  private:
    std::shared_ptr<detail::value_state<T>> state_;
};

template <typename T>
future<std::decay_t<T>> make_ready_future(T &&value)
{
    using V = std::decay_t<T>;
    return future<V>(std::make_shared<detail::value_state<V>>(std::forward<T>(value)));
}

inline future<void> make_ready_future()
{
    return future<void>(std::make_shared<detail::value_state<void>>(std::monostate{}));
}

/// Schedules `body` to run once every dependency is ready and returns a
/// handle to its result. The body runs at most once. If any dependency
/// failed, the body is skipped and the returned handle carries that error.
///
/// Dependencies already exist when submit is called, so cycles cannot form.
template <typename F>
auto submit(std::span<const any_future> dependencies, F &&body)
{
    using R = std::invoke_result_t<std::decay_t<F> &>;
    auto node = std::make_shared<detail::task_state<R, std::decay_t<F>>>(std::forward<F>(body));

    std::vector<detail::state_ptr> deps;
    deps.reserve(dependencies.size());
    for (const auto &d : dependencies)
    {
        if (!d.valid())
            throw std::invalid_argument("submit: dependency handle is empty");
        deps.push_back(d.state());
    }
    detail::register_task(node, deps);
    return future<R>(std::move(node));
}

template <typename F>
auto submit(std::initializer_list<any_future> dependencies, F &&body)
{
    return submit(std::span<const any_future>(dependencies.begin(), dependencies.size()), std::forward<F>(body));
}

template <typename F>
auto async(F &&body)
{
    return submit(std::span<const any_future>{}, std::forward<F>(body));
}

/// Runs `fn(a.get(), b.get(), ...)` once all argument futures are ready.
template <typename F, typename... Ts>
auto dataflow(F &&fn, const future<Ts> &...args)
{
    std::array<any_future, sizeof...(Ts)> deps{ any_future(args)... };
    return submit(std::span<const any_future>(deps),
                  [fn = std::forward<F>(fn), ... args = args]() mutable { return fn(args.get()...); });
}

/// Executes `computation` as a task inside the runtime and blocks the
/// calling thread until it finishes. Errors raised inside are rethrown here.
/// Called from a pool worker, the computation simply runs inline.
template <typename F>
auto run_as_root(F &&computation) -> std::invoke_result_t<std::decay_t<F> &>
{
    using R = std::invoke_result_t<std::decay_t<F> &>;
    if (this_worker())
        return std::invoke(computation);
    if (state() == lifecycle::stopped)
        throw not_running();

    if constexpr (std::is_void_v<R>)
    {
        async(std::forward<F>(computation)).get();
    }
    else
    {
        auto f = async(std::forward<F>(computation));
        f.wait();
        return f.get();
    }
}

}  // namespace taskgp::rt

#endif
