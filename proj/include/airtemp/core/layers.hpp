#ifndef AIRTEMP_CORE_LAYERS_HPP
#define AIRTEMP_CORE_LAYERS_HPP

#include <memory>
#include <string>
#include <vector>

#include "airtemp/core/param_store.hpp"
#include "airtemp/core/rng.hpp"
#include "airtemp/core/tensor.hpp"

namespace airtemp {

enum class LayerKind { dense, conv3x3, relu, residual_block, self_attention };

/// Architecture element description; used by the model builders.
struct LayerSpec {
    LayerKind kind;
    int in_channels = 0;
    int out_channels = 0;
};

// ---------------------------------------------------------------------------
// Stateless spec-level ops. conv2d uses 3x3 kernels with zero same-padding;
// dense expects weights F_out x F_in; self-attention expects params "wq",
// "wk", "wv" (8x8 each) and a hidden width of exactly 64.
// ---------------------------------------------------------------------------

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
Tensor relu_forward(const Tensor& input);
Tensor self_attention_forward(const Tensor& input, const ParamStore& params);

// ---------------------------------------------------------------------------
// Trainable layers. forward() is const and thread-safe over a frozen store;
// train_forward() records activations for the next backward(). backward()
// accumulates parameter gradients into the store and returns dL/dinput;
// it throws StateError when no forward pass was recorded.
// ---------------------------------------------------------------------------

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const ParamStore& ps, const Tensor& x) const = 0;
    virtual Tensor train_forward(ParamStore& ps, const Tensor& x) = 0;
    virtual Tensor backward(ParamStore& ps, const Tensor& gy) = 0;
    virtual void register_params(ParamStore& ps) const = 0;
    virtual void init_params(ParamStore& ps, Rng& rng) const = 0;
};

class DenseLayer : public Layer {
public:
    DenseLayer(std::string name, int in_features, int out_features);
    Tensor forward(const ParamStore& ps, const Tensor& x) const override;
    Tensor train_forward(ParamStore& ps, const Tensor& x) override;
    Tensor backward(ParamStore& ps, const Tensor& gy) override;
    void register_params(ParamStore& ps) const override;
    void init_params(ParamStore& ps, Rng& rng) const override;

    const std::string& weight_name() const { return wname_; }
    const std::string& bias_name() const { return bname_; }

private:
    std::string wname_, bname_;
    int fin_, fout_;
    Tensor cached_input_;
    bool has_cache_ = false;
};

class ReluLayer : public Layer {
public:
    Tensor forward(const ParamStore& ps, const Tensor& x) const override;
    Tensor train_forward(ParamStore& ps, const Tensor& x) override;
    Tensor backward(ParamStore& ps, const Tensor& gy) override;
    void register_params(ParamStore&) const override {}
    void init_params(ParamStore&, Rng&) const override {}

private:
    Tensor cached_input_;
    bool has_cache_ = false;
};

class Conv3x3Layer : public Layer {
public:
    Conv3x3Layer(std::string name, int in_channels, int out_channels);
    Tensor forward(const ParamStore& ps, const Tensor& x) const override;
    Tensor train_forward(ParamStore& ps, const Tensor& x) override;
    Tensor backward(ParamStore& ps, const Tensor& gy) override;
    void register_params(ParamStore& ps) const override;
    void init_params(ParamStore& ps, Rng& rng) const override;
    void zero_params(ParamStore& ps) const;

private:
    std::string wname_, bname_;
    int cin_, cout_;
    Tensor cached_input_;
    bool has_cache_ = false;
};

/// 1x1 convolution; the learned skip projection of residual blocks.
class Conv1x1Layer : public Layer {
public:
    Conv1x1Layer(std::string name, int in_channels, int out_channels);
    Tensor forward(const ParamStore& ps, const Tensor& x) const override;
    Tensor train_forward(ParamStore& ps, const Tensor& x) override;
    Tensor backward(ParamStore& ps, const Tensor& gy) override;
    void register_params(ParamStore& ps) const override;
    void init_params(ParamStore& ps, Rng& rng) const override;
    void zero_params(ParamStore& ps) const;

private:
    std::string wname_, bname_;
    int cin_, cout_;
    Tensor cached_input_;
    bool has_cache_ = false;
};

/// Single-head scaled dot-product attention over a B x 64 batch: each row is
/// reshaped to 8 tokens x 8 dims, passed through learned 8x8 Q/K/V
/// projections, and added back to the input (residual).
class SelfAttentionLayer : public Layer {
public:
    explicit SelfAttentionLayer(std::string name);
    Tensor forward(const ParamStore& ps, const Tensor& x) const override;
    Tensor train_forward(ParamStore& ps, const Tensor& x) override;
    Tensor backward(ParamStore& ps, const Tensor& gy) override;
    void register_params(ParamStore& ps) const override;
    void init_params(ParamStore& ps, Rng& rng) const override;

    static constexpr int kWidth = 64;
    static constexpr int kTokens = 8;
    static constexpr int kDims = 8;

private:
    std::string qname_, kname_, vname_;
    Tensor cached_input_, cached_q_, cached_k_, cached_v_, cached_p_;
    bool has_cache_ = false;
};

/// conv3x3 -> ReLU -> conv3x3, skip add (learned 1x1 projection when the
/// channel counts differ), then ReLU. The final activation can be disabled
/// so the block can serve as a signed regression output.
class ResidualConvBlock : public Layer {
public:
    ResidualConvBlock(std::string name, int in_channels, int out_channels, bool final_relu = true);
    Tensor forward(const ParamStore& ps, const Tensor& x) const override;
    Tensor train_forward(ParamStore& ps, const Tensor& x) override;
    Tensor backward(ParamStore& ps, const Tensor& gy) override;
    void register_params(ParamStore& ps) const override;
    void init_params(ParamStore& ps, Rng& rng) const override;
    /// Zeroes the second conv and the skip projection so the block output
    /// starts at exactly zero.
    void zero_output_init(ParamStore& ps) const;

    int in_channels() const { return cin_; }
    int out_channels() const { return cout_; }

private:
    int cin_, cout_;
    bool final_relu_;
    bool projected_;
    Conv3x3Layer conv1_, conv2_;
    std::unique_ptr<Conv1x1Layer> proj_;
    ReluLayer relu_mid_;
    Tensor cached_input_, cached_sum_;
    bool has_cache_ = false;
};

/// Dense flavor of the residual block for vector features:
/// dense -> ReLU -> dense, identity skip, final ReLU.
class ResidualDenseBlock : public Layer {
public:
    ResidualDenseBlock(std::string name, int width);
    Tensor forward(const ParamStore& ps, const Tensor& x) const override;
    Tensor train_forward(ParamStore& ps, const Tensor& x) override;
    Tensor backward(ParamStore& ps, const Tensor& gy) override;
    void register_params(ParamStore& ps) const override;
    void init_params(ParamStore& ps, Rng& rng) const override;

private:
    int width_;
    DenseLayer fc1_, fc2_;
    ReluLayer relu_mid_;
    Tensor cached_input_, cached_sum_;
    bool has_cache_ = false;
};

/// Glorot-uniform fill used for all weight matrices.
void glorot_fill(Tensor& t, int fan_in, int fan_out, Rng& rng);

void require_finite(const Tensor& t, const std::string& what);

} // namespace airtemp

#endif
