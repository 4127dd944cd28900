#pragma once

#include <stdexcept>
#include <string>

namespace schemaref {

/// Hard failure raised by any module. Soft failures (a backend that could not
/// answer, a query that did not execute) are carried as data instead.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace schemaref
