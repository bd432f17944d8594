#pragma once

#include <stdexcept>
#include <string>

namespace lsps {

// Malformed or inconsistent input data (CLI exit 65).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration or unusable arguments (CLI exit 64).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical routine failed or the model is not identifiable (CLI exit 70).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lsps
