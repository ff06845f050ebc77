#include "fsseg/mask.hpp"

#include <string>

namespace fsseg {

BinaryMask::BinaryMask(int h, int w) : height(h), width(w) {
    if (h <= 0 || w <= 0) {
        throw ShapeError("mask dimensions must be positive");
    }
    values.assign(static_cast<std::size_t>(h) * w, 0);
}

std::int64_t BinaryMask::foreground_count() const {
    std::int64_t n = 0;
    for (std::uint8_t v : values) n += v;
    return n;
}

void validate_mask(const BinaryMask& mask, const char* context) {
    if (mask.height <= 0 || mask.width <= 0 ||
        mask.values.size() != static_cast<std::size_t>(mask.size())) {
        throw ShapeError(std::string(context) + ": inconsistent mask storage");
    }
    for (std::uint8_t v : mask.values) {
        if (v > 1) {
            throw DataError(std::string(context) +
                            ": mask values must be 0 or 1, got " + std::to_string(v));
        }
    }
}

BinaryMask downsample_mask(const BinaryMask& mask, int out_h, int out_w) {
    validate_mask(mask, "downsample_mask");
    if (out_h <= 0 || out_w <= 0 || mask.height % out_h != 0 ||
        mask.width % out_w != 0) {
        throw ShapeError("downsample_mask: " + std::to_string(mask.height) + "x" +
                         std::to_string(mask.width) + " not divisible into " +
                         std::to_string(out_h) + "x" + std::to_string(out_w));
    }
    const int bh = mask.height / out_h;
    const int bw = mask.width / out_w;
    const int block = bh * bw;
    BinaryMask out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            int count = 0;
            for (int by = 0; by < bh; ++by) {
                for (int bx = 0; bx < bw; ++bx) {
                    count += mask.at(y * bh + by, x * bw + bx);
                }
            }
            // 2*count >= block is the exact integer form of mean >= 0.5.
            out.at(y, x) = (2 * count >= block) ? 1 : 0;
        }
    }
    return out;
}

}  // namespace fsseg
