#include "nmkt/rng.hpp"

namespace nmkt {

namespace {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
    uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
}

uint64_t Rng::next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

uint64_t Rng::below(uint64_t n) {
    // rejection sampling, unbiased
    const uint64_t limit = n * ((~uint64_t{0} / n));
    uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

Rat Rng::uniform_rat(const Rat& lo, const Rat& hi) {
    const uint64_t k = next_u64() >> 1;  // 63 random bits
    Rat frac(BigInt(k), BigInt(1) << 63);
    return lo + (hi - lo) * frac;
}

Rng Rng::child(uint64_t index) const {
    uint64_t mix = seed_;
    uint64_t a = splitmix64(mix);
    mix ^= 0x632be59bd9b4e019ULL + index * 0x9e3779b97f4a7c15ULL;
    uint64_t b = splitmix64(mix);
    return Rng(a ^ rotl(b, 31) ^ (index * 0xd1342543de82ef95ULL + 1));
}

}  // namespace nmkt
