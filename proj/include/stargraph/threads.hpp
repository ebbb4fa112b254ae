#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace stargraph {

// Small persistent pool used for block-indexed work. Work items are claimed
// from an atomic counter, so the assignment of blocks to threads is
// arbitrary, but callers write per-block results into block-indexed storage
// and reduce in block order, keeping outputs independent of the thread
// count and of scheduling.
class ThreadPool {
  public:
    explicit ThreadPool(unsigned threads) {
        if (threads == 0) threads = 1;
        for (unsigned i = 0; i + 1 < threads; ++i)
            workers_.emplace_back([this] { worker_loop(); });
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    unsigned size() const { return static_cast<unsigned>(workers_.size()) + 1; }

    // Runs fn(block) for every block in [0, nblocks). The calling thread
    // participates. Rethrows the first exception raised by any block.
    void run_blocks(std::size_t nblocks, const std::function<void(std::size_t)>& fn) {
        if (nblocks == 0) return;
        if (workers_.empty() || nblocks == 1) {
            for (std::size_t b = 0; b < nblocks; ++b) fn(b);
            return;
        }
        {
            std::lock_guard<std::mutex> lk(mu_);
            pending_ = nblocks;
            error_ = nullptr;
            total_.store(nblocks, std::memory_order_relaxed);
            next_.store(0, std::memory_order_relaxed);
            job_fn_.store(&fn, std::memory_order_release);
            ++generation_;
        }
        cv_.notify_all();
        drain();
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [this] { return pending_ == 0; });
        if (error_) std::rethrow_exception(error_);
    }

    static unsigned hardware_threads() {
        unsigned n = std::thread::hardware_concurrency();
        return n ? n : 1;
    }

  private:
    void drain() {
        for (;;) {
            std::size_t b = next_.fetch_add(1, std::memory_order_relaxed);
            if (b >= total_.load(std::memory_order_relaxed)) break;
            run_one(b);
        }
    }

    void run_one(std::size_t b) {
        const auto* fn = job_fn_.load(std::memory_order_acquire);
        try {
            (*fn)(b);
        } catch (...) {
            std::lock_guard<std::mutex> lk(mu_);
            if (!error_) error_ = std::current_exception();
        }
        std::lock_guard<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_all();
    }

    void worker_loop() {
        std::size_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [this, seen] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            drain();
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::atomic<const std::function<void(std::size_t)>*> job_fn_{nullptr};
    std::atomic<std::size_t> next_{0};
    std::atomic<std::size_t> total_{0};
    std::size_t pending_ = 0;
    std::size_t generation_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

}  // namespace stargraph
