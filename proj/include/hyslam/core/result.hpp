#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace hyslam {

// Lightweight value-or-error carrier used by the fallible geometry and
// camera operations. E is expected to be a small enum.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : data_(std::in_place_index<0>, std::move(value)) {}
  Result(E error) : data_(std::in_place_index<1>, error) {}

  bool ok() const { return data_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const {
    assert(ok());
    return std::get<0>(data_);
  }
  T& value() {
    assert(ok());
    return std::get<0>(data_);
  }
  E error() const {
    assert(!ok());
    return std::get<1>(data_);
  }

 private:
  std::variant<T, E> data_;
};

}  // namespace hyslam
