#pragma once

#include "reckon/error.hpp"

#include <Eigen/Dense>

#include <string>

namespace reckon {

/// Dense real matrix, one sample per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void require_finite(const RowMatrix& m, const std::string& what) {
    if (!m.allFinite()) {
        throw NonFiniteError(what + " contains non-finite values");
    }
}

}  // namespace reckon
