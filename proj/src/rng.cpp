#include "widthlab/rng.hpp"

namespace widthlab {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

PhiloxEngine::PhiloxEngine(std::uint64_t seed, std::uint64_t stream) noexcept : stream_(stream) {
    key_ = {std::uint32_t(seed), std::uint32_t(seed >> 32)};
}

void PhiloxEngine::refill() noexcept {
    const Philox4x32::Counter ctr = {std::uint32_t(block_), std::uint32_t(block_ >> 32),
                                     std::uint32_t(stream_), std::uint32_t(stream_ >> 32)};
    const auto out = Philox4x32::block(ctr, key_);
    ++block_;
    buf_[0] = (std::uint64_t(out[1]) << 32) | out[0];
    buf_[1] = (std::uint64_t(out[3]) << 32) | out[2];
    pos_ = 0;
}

void PhiloxEngine::discard(std::uint64_t n) noexcept {
    const std::uint64_t idx = 2 * block_ - 2 + std::uint64_t(pos_) + n;
    block_ = idx / 2;
    pos_ = 2;
    if (idx % 2) {
        refill();
        pos_ = 1;
    }
}

PhiloxEngine RngPlan::stream(std::uint64_t purpose, std::uint64_t index) const {
    return PhiloxEngine(splitmix64(seed_ ^ splitmix64(purpose)), index);
}

} // namespace widthlab
