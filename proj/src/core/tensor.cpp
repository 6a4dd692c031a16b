#include "airtemp/core/tensor.hpp"

#include <cmath>
#include <sstream>

namespace airtemp {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimension must be positive, got " + std::to_string(d));
        n *= d;
    }
    return n;
}

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    std::int64_t n = shape_numel(shape);
    t.shape = std::move(shape);
    t.data.assign(static_cast<std::size_t>(n), 0.0f);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t = zeros(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<float> values) {
    std::int64_t n = shape_numel(shape);
    if (n != static_cast<std::int64_t>(values.size())) {
        throw DimensionError("tensor data length " + std::to_string(values.size()) +
                             " does not match shape product " + std::to_string(n));
    }
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::move(values);
    return t;
}

std::int64_t Tensor::numel() const {
    return static_cast<std::int64_t>(data.size());
}

int Tensor::dim(std::size_t axis) const {
    if (axis >= shape.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for rank " +
                             std::to_string(shape.size()) + " tensor");
    }
    return shape[axis];
}

bool Tensor::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(float value) {
    for (float& v : data) v = value;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

void require_shape(const Tensor& t, const std::vector<int>& shape, const std::string& what) {
    if (t.shape != shape) {
        Tensor want;
        want.shape = shape;
        throw DimensionError(what + ": expected shape " + want.shape_str() + ", got " + t.shape_str());
    }
}

} // namespace airtemp
