#pragma once

#include <stdexcept>
#include <string>

namespace gbdt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Spectra of the two Sylvester coefficients are not separated. `gap()` is the
/// smallest attained |lambda_i - mu_j|.
class SpectralSeparationError : public Error {
 public:
  SpectralSeparationError(const std::string& what, double gap)
      : Error(what), gap_(gap) {}
  double gap() const { return gap_; }

 private:
  double gap_;
};

class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(const std::string& what, double min_eig)
      : Error(what), min_eig_(min_eig) {}
  double min_eig() const { return min_eig_; }

 private:
  double min_eig_;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Malformed files, unknown names, bad CLI arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace gbdt
