#pragma once

#include <stdexcept>
#include <string>

namespace fairdetect {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, external 4.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class ExternalError : public std::runtime_error {
public:
    explicit ExternalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fairdetect
