#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fsseg {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched or invalid tensor/mask dimensions.
class ShapeError : public Error {
    using Error::Error;
};

// Malformed or truncated file contents; carries the byte offset at which
// parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

// Dataset-level problems: missing files, unsampleable splits, empty inputs.
class DataError : public Error {
    using Error::Error;
};

// Mask has no foreground cell where one is required.
class EmptyMaskError : public Error {
    using Error::Error;
};

// Mask is all-foreground or all-background where both regions are required.
// support_index() identifies the offending support in multi-support calls,
// -1 for single-input calls.
class DegenerateMaskError : public Error {
public:
    explicit DegenerateMaskError(const std::string& msg, int support_index = -1)
        : Error(msg), support_index_(support_index) {}

    int support_index() const { return support_index_; }

private:
    int support_index_;
};

// A numeric value became NaN or infinite.
class NonFiniteError : public Error {
    using Error::Error;
};

}  // namespace fsseg
