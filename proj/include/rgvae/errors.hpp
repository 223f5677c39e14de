#pragma once

#include <stdexcept>
#include <string>

namespace rgvae {

// Error taxonomy used across the library. All derive from std::runtime_error
// so callers may catch coarsely; tests assert on the specific type.

struct shape_error : std::runtime_error {
    explicit shape_error(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct contract_error : std::runtime_error {
    explicit contract_error(const std::string& msg) : std::runtime_error("contract error: " + msg) {}
};

struct bounds_error : std::runtime_error {
    explicit bounds_error(const std::string& msg) : std::runtime_error("bounds error: " + msg) {}
};

struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error("parse error: " + msg) {}
};

struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error("data error: " + msg) {}
};

struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

}  // namespace rgvae
