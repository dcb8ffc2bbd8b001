#pragma once

#include <optional>
#include <vector>

#include "mfcavi/linalg.hpp"

namespace mfcavi {

/// Partition of R^d into K blocks of sizes d_k, with optional per-block
/// smoothness weights L_k. Immutable after construction; weight filling
/// produces a new value.
class BlockStructure {
public:
    explicit BlockStructure(std::vector<int> sizes);
    BlockStructure(std::vector<int> sizes, std::vector<double> weights);

    int block_count() const { return static_cast<int>(sizes_.size()); }
    int dimension() const { return dimension_; }
    int size(int k) const { return sizes_.at(static_cast<std::size_t>(k)); }
    int offset(int k) const { return offsets_.at(static_cast<std::size_t>(k)); }
    const std::vector<int>& sizes() const { return sizes_; }

    bool all_scalar() const;

    /// Index of the block containing flat coordinate i.
    int block_of(int i) const;

    bool has_weights() const { return weights_.has_value(); }
    const std::vector<double>& weights() const;
    double weight(int k) const { return weights().at(static_cast<std::size_t>(k)); }

    BlockStructure with_weights(std::vector<double> weights) const;

private:
    std::vector<int> sizes_;
    std::vector<int> offsets_;
    int dimension_;
    std::optional<std::vector<double>> weights_;

    void validate_weights(const std::vector<double>& w) const;
};

}  // namespace mfcavi
