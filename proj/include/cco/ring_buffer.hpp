#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cco {

// Fixed-capacity FIFO that overwrites its oldest element when full. Storage
// grows lazily up to the capacity, so an "unbounded" ring (capacity =
// size_t max) behaves like a growing vector. Capacity 0 discards every push.
//
// Not thread-safe; owners serialise access.
template <typename T>
class BoundedRing {
 public:
  static constexpr std::size_t kUnbounded =
      std::numeric_limits<std::size_t>::max();

  explicit BoundedRing(std::size_t capacity = 0) : capacity_(capacity) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  bool full() const noexcept { return size_ == capacity_; }

  void push(T value) {
    if (capacity_ == 0) return;
    if (size_ < capacity_) {
      // head_ stays 0 until the first wrap-around.
      storage_.push_back(std::move(value));
      ++size_;
      return;
    }
    storage_[head_] = std::move(value);
    head_ = (head_ + 1) % capacity_;
  }

  // 0 = oldest retained element.
  const T& operator[](std::size_t i) const {
    return storage_[physical(i)];
  }
  T& operator[](std::size_t i) { return storage_[physical(i)]; }

  const T& at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("BoundedRing::at");
    return (*this)[i];
  }

  const T& oldest() const { return at(0); }
  const T& newest() const { return at(size_ - 1); }

  void clear() {
    storage_.clear();
    size_ = 0;
    head_ = 0;
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < size_; ++i) fn((*this)[i]);
  }

 private:
  std::size_t physical(std::size_t i) const {
    // Before wrap-around storage_.size() < capacity_ and head_ == 0.
    return size_ < capacity_ ? i : (head_ + i) % capacity_;
  }

  std::size_t capacity_;
  std::vector<T> storage_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace cco
