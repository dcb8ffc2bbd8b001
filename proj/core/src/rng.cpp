#include "mfcavi/rng.hpp"

namespace mfcavi {

std::string Schedule::describe() const {
    switch (kind_) {
        case Kind::Random:
            return "random(seed=" + std::to_string(seed_) + ")";
        case Kind::Cyclic:
            return "cyclic";
        case Kind::Fixed: {
            std::string s = "fixed(";
            for (std::size_t i = 0; i < sequence_.size(); ++i) {
                if (i) s += ",";
                s += std::to_string(sequence_[i]);
            }
            return s + ")";
        }
    }
    return "?";
}

void Schedule::validate(int block_count) const {
    if (kind_ == Kind::Fixed)
        for (int k : sequence_)
            if (k < 0 || k >= block_count)
                throw std::invalid_argument("Schedule: fixed index " + std::to_string(k) +
                                            " out of range for K = " + std::to_string(block_count));
}

ScheduleCursor::ScheduleCursor(const Schedule& schedule, int block_count)
    : kind_(schedule.kind()), block_count_(block_count), rng_(schedule.seed()),
      sequence_(schedule.sequence()) {
    if (block_count < 1) throw std::invalid_argument("ScheduleCursor: K must be >= 1");
    schedule.validate(block_count);
    if (kind_ == Schedule::Kind::Cyclic) {
        sequence_.resize(static_cast<std::size_t>(block_count));
        for (int k = 0; k < block_count; ++k) sequence_[static_cast<std::size_t>(k)] = k;
    }
}

int ScheduleCursor::next() {
    if (kind_ == Schedule::Kind::Random) return next_index(rng_, block_count_);
    const int k = sequence_[pos_];
    pos_ = (pos_ + 1) % sequence_.size();
    return k;
}

}  // namespace mfcavi
