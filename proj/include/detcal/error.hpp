#pragma once

#include <stdexcept>
#include <string>

namespace detcal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range data (boxes, scores, array shapes).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid tuning parameter such as a threshold, bin count or temperature.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A file that does not conform to its documented schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace detcal
