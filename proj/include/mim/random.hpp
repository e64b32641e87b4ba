#ifndef MIM_RANDOM_HPP
#define MIM_RANDOM_HPP

#include <cstdint>
#include <random>

namespace mim {

// mt19937_64 with hand-rolled transforms so that a seed gives the same stream
// on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on (0, 1), 53 random bits.
    double uniform();
    double normal();
    double exponential(double rate);

    // Seed for the index-th member of an ensemble started from `seed`.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mim

#endif
