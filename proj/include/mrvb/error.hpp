#ifndef MRVB_ERROR_HPP
#define MRVB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mrvb {

/// Broad failure classes. They map one-to-one onto C API status codes and
/// CLI exit codes.
enum class ErrorKind {
  invalid_argument,  // caller violated a precondition
  data,              // malformed or degenerate input data
  numerical,         // non-finite or divergent quantity during computation
  io                 // filesystem problem
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return Error(ErrorKind::invalid_argument, what); }
inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error numerical_failure(const std::string& what) { return Error(ErrorKind::numerical, what); }
inline Error io_error(const std::string& what) { return Error(ErrorKind::io, what); }

}  // namespace mrvb

#endif  // MRVB_ERROR_HPP
