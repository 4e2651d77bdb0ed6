#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace widthlab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11 constants).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
            const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
            const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += W0;
            key[1] += W1;
        }
        return ctr;
    }
};

// One independent stream: key = mixed master seed, counter = (block index, stream id).
// Satisfies UniformRandomBitGenerator, so std distributions work on it.
class PhiloxEngine {
public:
    using result_type = std::uint64_t;

    PhiloxEngine(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (pos_ == 2) refill();
        return buf_[pos_++];
    }

    // Uniform in (0, 1), never exactly 0.
    double uniform() noexcept { return (double((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    void discard(std::uint64_t n) noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key key_{};
    std::uint64_t block_ = 0;
    std::uint64_t stream_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int pos_ = 2;
};

// Standard normal by Boost's ziggurat on Philox bits. Stateless between draws,
// so a sample depends only on the engine position.
class NormalSampler {
public:
    double operator()(PhiloxEngine& eng) { return dist_(eng); }
    void reset() noexcept { dist_.reset(); }

private:
    boost::random::normal_distribution<double> dist_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Deterministic stream allocation from a master seed. Every estimator asks for a
// purpose tag plus an index (sample block, grid point, ...), never for shared state.
class RngPlan {
public:
    explicit RngPlan(std::uint64_t master_seed = 0) : seed_(master_seed) {}
    std::uint64_t master_seed() const { return seed_; }
    PhiloxEngine stream(std::uint64_t purpose, std::uint64_t index) const;
    RngPlan derive(std::uint64_t purpose) const { return RngPlan(splitmix64(seed_ ^ splitmix64(purpose + 0x632BE59BD9B4E019ull))); }

private:
    std::uint64_t seed_;
};

} // namespace widthlab
