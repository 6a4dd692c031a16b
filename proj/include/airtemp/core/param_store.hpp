#ifndef AIRTEMP_CORE_PARAM_STORE_HPP
#define AIRTEMP_CORE_PARAM_STORE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "airtemp/core/tensor.hpp"

namespace airtemp {

/// Named trainable parameters with same-shaped gradients and Adam state.
/// Single writer during training; a frozen store may be read from many
/// threads.
class ParamStore {
public:
    /// Registers a zero-initialized parameter. Throws StateError if the name
    /// already exists.
    Tensor& create(const std::string& name, std::vector<int> shape);

    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;
    Tensor& grad(const std::string& name);
    const Tensor& grad(const std::string& name) const;
    bool has(const std::string& name) const;

    /// Names in lexicographic order; iteration over parameters is
    /// deterministic.
    std::vector<std::string> names() const;

    void zero_grads();
    void mark_grads_ready() { grads_ready_ = true; }
    bool grads_ready() const { return grads_ready_; }

    /// Standard Adam update (beta1 0.9, beta2 0.999, eps 1e-8, bias
    /// correction). Increments the step counter and consumes the gradients.
    /// Throws StateError when no backward pass populated them.
    void adam_step(double lr);

    std::int64_t step_count() const { return step_; }
    std::int64_t total_size() const;

    /// Copy of the parameter values only (no gradients, no Adam state);
    /// used for ensemble snapshots.
    std::map<std::string, Tensor> snapshot() const;
    void restore(const std::map<std::string, Tensor>& snapshot_values);

private:
    struct AdamSlot {
        std::vector<double> m, v;
    };

    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> grads_;
    std::map<std::string, AdamSlot> adam_;
    std::int64_t step_ = 0;
    bool grads_ready_ = false;
};

} // namespace airtemp

#endif
