#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace cqeo {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: output is a pure function of
// (counter, key), so any trajectory/step can be regenerated independently.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(Key key) : key_(key) {}
    explicit constexpr Philox4x32(std::uint64_t key)
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

    constexpr Counter operator()(Counter ctr) const {
        Key k = key_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k[0] += kWeyl0;
                k[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    Key key_;
};

/// Two standard normals from one Philox block (Box-Muller on 53-bit uniforms in (0, 1]).
inline std::array<double, 2> normal_pair(const Philox4x32::Counter& bits) {
    auto uniform = [](std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t x = (std::uint64_t{hi} << 32 | lo) >> 11;
        return (static_cast<double>(x) + 1.0) * 0x1.0p-53;
    };
    const double u1 = uniform(bits[0], bits[1]);
    const double u2 = uniform(bits[2], bits[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace cqeo
