#ifndef KGC_ERRORS_HPP
#define KGC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kgc {

/// Raised when inputs violate a documented precondition (bad file, bad flag,
/// dimension mismatch). The CLI maps these to exit code 2; everything else
/// is an internal error (exit code 1).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kgc

#endif  // KGC_ERRORS_HPP
