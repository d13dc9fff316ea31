#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "kscal/errors.hpp"

namespace kscal {

/// Row-major matrix of observations: rows() observations of dimension dim.
/// The queueing experiments use dim = 1; the data path is general.
struct DataMatrix {
    std::vector<double> values;
    std::size_t dim = 1;

    DataMatrix() = default;
    DataMatrix(std::vector<double> v, std::size_t d) : values(std::move(v)), dim(d) { validate(); }

    std::size_t rows() const { return dim == 0 ? 0 : values.size() / dim; }

    const double* row(std::size_t i) const { return values.data() + i * dim; }

    void validate() const {
        if (dim == 0) throw DimensionError("DataMatrix: dimension must be positive");
        if (values.size() % dim != 0)
            throw DimensionError("DataMatrix: value count not a multiple of dimension");
        for (double v : values)
            if (!std::isfinite(v)) throw DomainError("DataMatrix: non-finite entry");
    }
};

}  // namespace kscal
