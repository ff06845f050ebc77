#include "fsseg/rng.hpp"

#include <cassert>
#include <cmath>

namespace fsseg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return splitmix64(state_);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint32_t Rng::uniform_int(std::uint32_t n) {
    assert(n > 0);
    // Multiply-shift mapping of a 64-bit draw onto [0, n).
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

std::uint64_t mix_seed(std::uint64_t x) {
    return splitmix64(x + 0x9e3779b97f4a7c15ull);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = mix_seed(base);
    h = mix_seed(h ^ (a + 0xd1b54a32d192ed03ull));
    h = mix_seed(h ^ (b + 0x8cb92ba72f3d8dd7ull));
    return h;
}

}  // namespace fsseg
