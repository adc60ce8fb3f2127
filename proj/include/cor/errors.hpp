#pragma once

#include <stdexcept>
#include <string>

namespace cor {

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateVector : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyMask : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyText : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidMask : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedSetting : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VlmProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VlmFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RetryExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cor
