#pragma once

#include <stdexcept>
#include <string>

namespace smaq {

// Three failure families, mapped one-to-one onto CLI exit codes 1, 2 and 3.

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace smaq
