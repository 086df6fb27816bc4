#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mde {

// Base of every error thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a precondition (bad dimensions, negative order, ...).
class invalid_input : public error {
 public:
  using error::error;
};

class dimension_mismatch : public invalid_input {
 public:
  using invalid_input::invalid_input;
};

// A custom moment table was read past its end without an extension rule.
class out_of_range_error : public error {
 public:
  out_of_range_error(std::size_t index, std::size_t available)
      : error("moment table exhausted: index " + std::to_string(index) + " requested, " +
              std::to_string(available) + " values available and no extension rule"),
        index_(index),
        available_(available) {}

  std::size_t index() const noexcept { return index_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t index_;
  std::size_t available_;
};

// Iterated moment derivative asked for more derivatives than the series order.
class order_exhausted : public error {
 public:
  using error::error;
};

// Mathematical failures. The CLI maps these to exit code 3.
class math_error : public error {
 public:
  using error::error;
};

class singular_at_origin : public math_error {
 public:
  using math_error::math_error;
};

// A(0) has no cyclic vector (minimal and characteristic polynomials differ).
class no_cyclic_vector : public math_error {
 public:
  using math_error::math_error;
};

// v0 A0^j A_p != 0 for some 1 <= p, 0 <= j <= n - 2.
class condition_ii_violation : public math_error {
 public:
  condition_ii_violation(const std::string& what, std::size_t j, std::size_t p) : math_error(what), j_(j), p_(p) {}
  std::size_t j() const noexcept { return j_; }
  std::size_t p() const noexcept { return p_; }

 private:
  std::size_t j_;
  std::size_t p_;
};

}  // namespace mde
