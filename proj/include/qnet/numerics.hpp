#ifndef QNET_NUMERICS_HPP
#define QNET_NUMERICS_HPP

#include <cmath>
#include <cstdint>

namespace qnet {

// Neumaier compensated accumulator. Keeps the low-order bits that a plain
// running sum of mixed-magnitude terms would shed.
template <typename T = double>
class CompensatedSum {
  public:
    void add(T x) {
        T t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    T value() const { return sum_ + comp_; }

  private:
    T sum_ = 0;
    T comp_ = 0;
};

// SplitMix64: deterministic stream-splitting for seeding independent RNGs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives the seed for one named substream of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                 std::uint64_t purpose) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= replication * 0x9e3779b97f4a7c15ULL + 0x243f6a8885a308d3ULL;
    std::uint64_t b = splitmix64(s);
    s ^= purpose * 0xda942042e4dd58b5ULL + 0x452821e638d01377ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b * 0x9e3779b97f4a7c15ULL) ^ c;
}

}  // namespace qnet

#endif  // QNET_NUMERICS_HPP
