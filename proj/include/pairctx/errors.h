#ifndef PAIRCTX_ERRORS_H_
#define PAIRCTX_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pairctx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record could not be decoded. line() is 1-based; 0 means "not line based".
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Input decoded fine but violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Two gold triples disagree on the label of one (gene, disease) key.
class ConflictError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pairctx

#endif  // PAIRCTX_ERRORS_H_
