#pragma once

#include <stdexcept>
#include <string>

namespace icd9group {

// Error taxonomy mirrored by the CLI exit codes:
//   UsageError -> 1, DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
  using Error::Error;
};

// Malformed or missing input data: files, columns, codes, schemas.
class DataError : public Error {
public:
  using Error::Error;
};

// Non-finite values or other numeric breakdown during training/inference.
class NumericError : public Error {
public:
  using Error::Error;
};

}  // namespace icd9group
