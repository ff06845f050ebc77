#pragma once

#include <cstdint>
#include <vector>

#include "fsseg/error.hpp"

namespace fsseg {

// Rank-2 {0,1} grid, row-major.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    BinaryMask() = default;
    BinaryMask(int h, int w);  // zero-filled

    std::uint8_t at(int y, int x) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int y, int x) {
        return values[static_cast<std::size_t>(y) * width + x];
    }

    std::int64_t size() const {
        return static_cast<std::int64_t>(height) * width;
    }
    std::int64_t foreground_count() const;

    bool operator==(const BinaryMask&) const = default;
};

// Throws ShapeError on inconsistent storage, DataError on values outside {0,1}.
void validate_mask(const BinaryMask& mask, const char* context);

// Block-majority downsample: an output cell is 1 iff the average of its
// (H/h)x(W/w) source block is >= 0.5; exact ties go to foreground. Source
// dimensions must be integer multiples of the target dimensions.
BinaryMask downsample_mask(const BinaryMask& mask, int out_h, int out_w);

}  // namespace fsseg
