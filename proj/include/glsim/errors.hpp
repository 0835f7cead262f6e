#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace glsim {

// base class for everything thrown by this library
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// invalid architecture parameters or inconsistent run options (CLI exit code 1)
class config_error : public error {
public:
    using error::error;
};

// unreadable or malformed input data: images, weight containers (CLI exit code 2)
class data_error : public error {
public:
    static constexpr std::size_t no_offset = static_cast<std::size_t>(-1);

    explicit data_error(const std::string& msg, std::size_t byte_offset = no_offset)
        : error(byte_offset == no_offset ? msg : msg + " (byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}

    std::size_t offset;
};

// non-finite values produced during a forward pass (CLI exit code 3)
class numeric_error : public error {
public:
    numeric_error(const std::string& msg, int layer_index)
        : error(msg + " (layer " + std::to_string(layer_index) + ")"), layer(layer_index) {}

    int layer;
};

} // namespace glsim
