#pragma once

#include <string_view>
#include <utility>
#include <variant>

namespace nndag {

/// Why an acyclicity function could not be evaluated at a point.
enum class DomainViolation {
  logdet_undefined,  ///< a pivot of the LU is ~0 or the determinant is <= 0
  nonfinite,         ///< the value overflowed or the input was not finite
};

constexpr std::string_view to_string(DomainViolation v) noexcept {
  switch (v) {
    case DomainViolation::logdet_undefined:
      return "logdet-undefined";
    case DomainViolation::nonfinite:
      return "nonfinite";
  }
  return "unknown";
}

/// Either a value or a DomainViolation. A minimal stand-in for std::expected.
template <class T>
class Result {
 public:
  Result(T value) : data_(std::move(value)) {}  // NOLINT(implicit)
  Result(DomainViolation v) : data_(v) {}        // NOLINT(implicit)

  bool has_value() const noexcept { return data_.index() == 0; }
  explicit operator bool() const noexcept { return has_value(); }

  const T& value() const& { return std::get<0>(data_); }
  T& value() & { return std::get<0>(data_); }
  T&& value() && { return std::get<0>(std::move(data_)); }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

  DomainViolation error() const { return std::get<1>(data_); }

 private:
  std::variant<T, DomainViolation> data_;
};

}  // namespace nndag
