#pragma once

#include <stdexcept>
#include <string>

namespace supt {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension or broadcast mismatch between tensors.
struct ShapeError : Error {
    using Error::Error;
};

// A caller violated an API contract (non-scalar loss, unnormalized scores, ...).
struct ContractError : Error {
    using Error::Error;
};

// Invalid graph, dataset, or file content.
struct DataError : Error {
    using Error::Error;
};

// Bad configuration key or value.
struct ConfigError : Error {
    using Error::Error;
};

// Non-finite values or diverging optimization.
struct NumericError : Error {
    using Error::Error;
};

// Metric undefined on the given input (e.g. single-class ROC-AUC).
struct MetricError : Error {
    using Error::Error;
};

}  // namespace supt
