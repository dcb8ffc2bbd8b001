#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfcavi {

/// splitmix64 (Steele/Lea/Flood; Vigna's fixed-increment variant).
/// The scan schedule, configs and trajectory files all promise bit-exact
/// reproducibility across platforms, which this generator delivers.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += UINT64_C(0x9E3779B97F4A7C15));
        z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
};

/// Uniform block index in {0,...,K-1} by modulo reduction. The modulo bias
/// for K up to 1e6 is below 1e-13 and irrelevant at test tolerances.
inline int next_index(SplitMix64& rng, int block_count) {
    if (block_count < 1) throw std::invalid_argument("next_index: K must be >= 1");
    return static_cast<int>(rng.next() % static_cast<std::uint64_t>(block_count));
}

/// Scan order: random (seeded), cyclic 0..K-1, or a fixed sequence that
/// repeats cyclically.
class Schedule {
public:
    enum class Kind { Random, Cyclic, Fixed };

    static Schedule random(std::uint64_t seed) {
        Schedule s;
        s.kind_ = Kind::Random;
        s.seed_ = seed;
        return s;
    }
    static Schedule cyclic() {
        Schedule s;
        s.kind_ = Kind::Cyclic;
        return s;
    }
    static Schedule fixed(std::vector<int> sequence) {
        if (sequence.empty()) throw std::invalid_argument("Schedule: fixed sequence is empty");
        Schedule s;
        s.kind_ = Kind::Fixed;
        s.sequence_ = std::move(sequence);
        return s;
    }

    Kind kind() const { return kind_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<int>& sequence() const { return sequence_; }

    Schedule with_seed(std::uint64_t seed) const {
        Schedule s = *this;
        s.seed_ = seed;
        return s;
    }

    std::string describe() const;
    void validate(int block_count) const;

private:
    Kind kind_ = Kind::Cyclic;
    std::uint64_t seed_ = 0;
    std::vector<int> sequence_;
};

/// Stateful iterator over a schedule's index stream.
class ScheduleCursor {
public:
    ScheduleCursor(const Schedule& schedule, int block_count);

    int next();

private:
    Schedule::Kind kind_;
    int block_count_;
    SplitMix64 rng_;
    std::vector<int> sequence_;
    std::size_t pos_ = 0;
};

}  // namespace mfcavi
