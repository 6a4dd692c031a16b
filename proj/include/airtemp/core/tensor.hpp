#ifndef AIRTEMP_CORE_TENSOR_HPP
#define AIRTEMP_CORE_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "airtemp/core/errors.hpp"

namespace airtemp {

/// Dense n-dimensional float32 array in row-major order.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, float value);
    static Tensor from(std::vector<int> shape, std::vector<float> values);

    std::int64_t numel() const;
    int dim(std::size_t axis) const;
    std::size_t rank() const { return shape.size(); }

    float& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    // 2-d / 3-d / 4-d accessors, row-major.
    float& at2(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
    float at2(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
    float& at3(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    float at3(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    float& at4(int o, int c, int i, int j) {
        return data[((static_cast<std::size_t>(o) * shape[1] + c) * shape[2] + i) * shape[3] + j];
    }
    float at4(int o, int c, int i, int j) const {
        return data[((static_cast<std::size_t>(o) * shape[1] + c) * shape[2] + i) * shape[3] + j];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    void fill(float value);

    std::string shape_str() const;
};

std::int64_t shape_numel(const std::vector<int>& shape);

/// Throws DimensionError unless the tensor has the given shape.
void require_shape(const Tensor& t, const std::vector<int>& shape, const std::string& what);

} // namespace airtemp

#endif
