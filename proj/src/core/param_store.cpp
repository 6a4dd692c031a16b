#include "airtemp/core/param_store.hpp"

#include <cmath>

namespace airtemp {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
} // namespace

Tensor& ParamStore::create(const std::string& name, std::vector<int> shape) {
    if (params_.count(name)) throw StateError("parameter '" + name + "' already registered");
    params_[name] = Tensor::zeros(shape);
    grads_[name] = Tensor::zeros(shape);
    AdamSlot slot;
    slot.m.assign(params_[name].data.size(), 0.0);
    slot.v.assign(params_[name].data.size(), 0.0);
    adam_[name] = std::move(slot);
    return params_[name];
}

Tensor& ParamStore::param(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw StateError("unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw StateError("unknown parameter '" + name + "'");
    return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw StateError("unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::grad(const std::string& name) const {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw StateError("unknown parameter '" + name + "'");
    return it->second;
}

bool ParamStore::has(const std::string& name) const {
    return params_.count(name) != 0;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& kv : params_) out.push_back(kv.first);
    return out;
}

void ParamStore::zero_grads() {
    for (auto& kv : grads_) kv.second.fill(0.0f);
    grads_ready_ = false;
}

void ParamStore::adam_step(double lr) {
    if (!grads_ready_) throw StateError("adam_step called before backward populated gradients");
    ++step_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
    for (auto& kv : params_) {
        Tensor& p = kv.second;
        const Tensor& g = grads_.at(kv.first);
        AdamSlot& slot = adam_.at(kv.first);
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double gi = static_cast<double>(g.data[i]);
            slot.m[i] = kBeta1 * slot.m[i] + (1.0 - kBeta1) * gi;
            slot.v[i] = kBeta2 * slot.v[i] + (1.0 - kBeta2) * gi * gi;
            const double mhat = slot.m[i] / bc1;
            const double vhat = slot.v[i] / bc2;
            p.data[i] = static_cast<float>(static_cast<double>(p.data[i]) -
                                           lr * mhat / (std::sqrt(vhat) + kEps));
        }
    }
    grads_ready_ = false;
}

std::int64_t ParamStore::total_size() const {
    std::int64_t n = 0;
    for (const auto& kv : params_) n += kv.second.numel();
    return n;
}

std::map<std::string, Tensor> ParamStore::snapshot() const {
    return params_;
}

void ParamStore::restore(const std::map<std::string, Tensor>& snapshot_values) {
    for (const auto& kv : snapshot_values) {
        Tensor& p = param(kv.first);
        if (!p.same_shape(kv.second)) {
            throw DimensionError("snapshot shape mismatch for '" + kv.first + "'");
        }
        p.data = kv.second.data;
    }
}

} // namespace airtemp
