#include "edgeprune/fifo.hpp"

#include <algorithm>

namespace edgeprune {

Fifo::Fifo(std::string edge_id, std::size_t token_size, std::size_t capacity,
           std::size_t initial_tokens)
    : edge_id_(std::move(edge_id)), token_size_(token_size), capacity_(capacity) {
  if (capacity_ == 0) throw Error("fifo " + edge_id_ + ": capacity must be > 0");
  if (initial_tokens > capacity_) throw Error("fifo " + edge_id_ + ": initial tokens exceed capacity");
  for (std::size_t i = 0; i < initial_tokens; ++i) queue_.emplace_back(token_size_, 0);
  counters_.capacity = capacity_;
  counters_.initial_tokens = initial_tokens;
  counters_.occupancy = initial_tokens;
  counters_.peak_occupancy = initial_tokens;
}

PushStatus Fifo::push(std::vector<Token> tokens) {
  for (const auto& t : tokens) {
    if (t.size() != token_size_) {
      throw Error("fifo " + edge_id_ + ": token of " + std::to_string(t.size()) +
                  " bytes, expected " + std::to_string(token_size_));
    }
  }
  if (tokens.size() > capacity_) {
    throw Error("fifo " + edge_id_ + ": push of " + std::to_string(tokens.size()) +
                " tokens exceeds capacity " + std::to_string(capacity_));
  }
  std::unique_lock lock(mu_);
  if (eos_) throw Error("fifo " + edge_id_ + ": push after end of stream");
  cv_.wait(lock, [&] { return aborted_ || closed_ || queue_.size() + tokens.size() <= capacity_; });
  if (aborted_) throw FifoAborted();
  if (closed_) return PushStatus::kClosed;
  for (auto& t : tokens) queue_.push_back(std::move(t));
  counters_.produced += tokens.size();
  counters_.occupancy = queue_.size();
  counters_.peak_occupancy = std::max(counters_.peak_occupancy, queue_.size());
  lock.unlock();
  cv_.notify_all();
  return PushStatus::kOk;
}

std::optional<std::vector<Token>> Fifo::pop(std::size_t count) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return aborted_ || eos_ || queue_.size() >= count; });
  if (aborted_) throw FifoAborted();
  if (queue_.size() < count) {
    counters_.discarded_partial += queue_.size();
    queue_.clear();
    counters_.occupancy = 0;
    return std::nullopt;
  }
  std::vector<Token> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(std::move(queue_.front()));
    queue_.pop_front();
  }
  counters_.consumed += count;
  counters_.occupancy = queue_.size();
  lock.unlock();
  cv_.notify_all();
  return out;
}

void Fifo::push_eos(std::string error) {
  {
    std::lock_guard lock(mu_);
    if (eos_) return;
    eos_ = true;
    eos_error_ = std::move(error);
  }
  cv_.notify_all();
}

void Fifo::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
    counters_.drained += queue_.size();
    queue_.clear();
    counters_.occupancy = 0;
  }
  cv_.notify_all();
}

void Fifo::abort() {
  {
    std::lock_guard lock(mu_);
    aborted_ = true;
  }
  cv_.notify_all();
}

std::optional<std::string> Fifo::eos_error() const {
  std::lock_guard lock(mu_);
  if (!eos_ || eos_error_.empty()) return std::nullopt;
  return eos_error_;
}

bool Fifo::eos() const {
  std::lock_guard lock(mu_);
  return eos_;
}

FifoCounters Fifo::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

}  // namespace edgeprune
