#pragma once

#include <cstddef>
#include <vector>

#include "stargraph/kernels.hpp"

namespace stargraph {

// Real symmetric matrix, packed upper triangle (see kernels.hpp for layout).
class SymMatrix {
  public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n) : n_(n), a_(kernels::packed_size(n), 0.0) {}

    std::size_t size() const { return n_; }
    const double* data() const { return a_.data(); }
    double* data() { return a_.data(); }

    double operator()(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        return a_[kernels::packed_row_offset(n_, i) + (j - i)];
    }
    double& upper(std::size_t i, std::size_t j) {
        return a_[kernels::packed_row_offset(n_, i) + (j - i)];
    }

  private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

}  // namespace stargraph
