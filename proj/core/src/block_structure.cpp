#include "mfcavi/block_structure.hpp"

#include <stdexcept>
#include <string>

namespace mfcavi {

BlockStructure::BlockStructure(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw std::invalid_argument("BlockStructure: need at least one block");
    offsets_.reserve(sizes_.size());
    int off = 0;
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
        if (sizes_[k] < 1)
            throw std::invalid_argument("BlockStructure: block " + std::to_string(k) +
                                        " has nonpositive size");
        offsets_.push_back(off);
        off += sizes_[k];
    }
    dimension_ = off;
}

BlockStructure::BlockStructure(std::vector<int> sizes, std::vector<double> weights)
    : BlockStructure(std::move(sizes)) {
    validate_weights(weights);
    weights_ = std::move(weights);
}

void BlockStructure::validate_weights(const std::vector<double>& w) const {
    if (w.size() != sizes_.size())
        throw std::invalid_argument("BlockStructure: weight count does not match block count");
    for (std::size_t k = 0; k < w.size(); ++k)
        if (!(w[k] > 0.0))
            throw std::invalid_argument("BlockStructure: weight L_" + std::to_string(k) +
                                        " must be positive");
}

bool BlockStructure::all_scalar() const {
    for (int s : sizes_)
        if (s != 1) return false;
    return true;
}

int BlockStructure::block_of(int i) const {
    if (i < 0 || i >= dimension_) throw std::out_of_range("block_of: coordinate out of range");
    int k = 0;
    while (k + 1 < block_count() && offsets_[static_cast<std::size_t>(k) + 1] <= i) ++k;
    return k;
}

const std::vector<double>& BlockStructure::weights() const {
    if (!weights_) throw std::logic_error("BlockStructure: weights not filled");
    return *weights_;
}

BlockStructure BlockStructure::with_weights(std::vector<double> weights) const {
    return BlockStructure(sizes_, std::move(weights));
}

}  // namespace mfcavi
