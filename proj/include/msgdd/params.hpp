#ifndef MSGDD_PARAMS_HPP
#define MSGDD_PARAMS_HPP

#include "msgdd/ops.hpp"
#include "msgdd/rng.hpp"

#include <string>
#include <vector>

namespace msgdd {

// Named view of one model tensor. Trainable entries take part in optimizer
// updates and gradient probes; buffers (batch-norm running statistics) are
// checkpointed only.
template <typename Scalar>
struct ParamRef {
    std::string name;
    ArrayX<Scalar>* data = nullptr;
    bool trainable = true;
};

template <typename Scalar>
struct ConvParam {
    int in_c = 0, out_c = 0, kernel = 3, stride = 1;
    ArrayX<Scalar> weight; // column-major (in_c*k*k) x out_c, flattened
    ArrayX<Scalar> bias;   // out_c

    void configure(int in_channels, int out_channels, int k, int s) {
        in_c = in_channels;
        out_c = out_channels;
        kernel = k;
        stride = s;
        weight = ArrayX<Scalar>::Zero(static_cast<Eigen::Index>(in_c) * kernel * kernel * out_c);
        bias = ArrayX<Scalar>::Zero(out_c);
    }

    Shape weight_shape() const { return Shape{out_c, in_c, kernel, kernel}; }
    Shape bias_shape() const { return Shape{1, out_c, 1, 1}; }
    Eigen::Index param_count() const { return weight.size() + bias.size(); }

    void init(SeededRng& rng, double stddev) {
        rng.fill_normal(weight, stddev);
        bias.setZero();
    }

    void collect(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
        out.push_back({prefix + ".w", &weight, true});
        out.push_back({prefix + ".b", &bias, true});
    }
};

// Tape handles for one bound convolution.
struct ConvVars {
    Var w, b;
};

template <typename Scalar>
ConvVars bind_conv(Tape<Scalar>& t, const ConvParam<Scalar>& p, bool trainable) {
    ConvVars v;
    v.w = trainable ? t.leaf(p.weight_shape(), p.weight) : t.constant(p.weight_shape(), p.weight);
    v.b = trainable ? t.leaf(p.bias_shape(), p.bias) : t.constant(p.bias_shape(), p.bias);
    return v;
}

// Copies parameters onto a tape and, when trainable, records the leaf handles
// in the same order collect() lists the trainable tensors. The optimizer and
// the gradient probes rely on that alignment.
template <typename Scalar>
struct Binder {
    Tape<Scalar>& tape;
    bool trainable;
    std::vector<Var> leaves;

    ConvVars conv(const ConvParam<Scalar>& p) {
        ConvVars v = bind_conv(tape, p, trainable);
        if (trainable) {
            leaves.push_back(v.w);
            leaves.push_back(v.b);
        }
        return v;
    }

    template <typename P>
    auto norm(const P& p); // defined after BatchNormVars
};

template <typename Scalar>
Var apply_conv(Tape<Scalar>& t, Var x, const ConvParam<Scalar>& p, const ConvVars& v) {
    return conv2d(t, x, v.w, v.b, p.kernel, p.stride);
}

template <typename Scalar>
struct BatchNormParam {
    ArrayX<Scalar> gamma;
    ArrayX<Scalar> beta;
    BatchNormState<Scalar> state;

    void configure(int channels) {
        gamma = ArrayX<Scalar>::Ones(channels);
        beta = ArrayX<Scalar>::Zero(channels);
        state.init(channels);
    }

    int channels() const { return static_cast<int>(gamma.size()); }
    Eigen::Index param_count() const { return gamma.size() + beta.size(); }

    void collect(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
        out.push_back({prefix + ".gamma", &gamma, true});
        out.push_back({prefix + ".beta", &beta, true});
        out.push_back({prefix + ".running_mean", &state.running_mean, false});
        out.push_back({prefix + ".running_var", &state.running_var, false});
    }
};

struct BatchNormVars {
    Var gamma, beta;
};

template <typename Scalar>
BatchNormVars bind_batch_norm(Tape<Scalar>& t, const BatchNormParam<Scalar>& p, bool trainable) {
    const Shape s{1, p.channels(), 1, 1};
    BatchNormVars v;
    v.gamma = trainable ? t.leaf(s, p.gamma) : t.constant(s, p.gamma);
    v.beta = trainable ? t.leaf(s, p.beta) : t.constant(s, p.beta);
    return v;
}

template <typename Scalar>
template <typename P>
auto Binder<Scalar>::norm(const P& p) {
    BatchNormVars v = bind_batch_norm(tape, p, trainable);
    if (trainable) {
        leaves.push_back(v.gamma);
        leaves.push_back(v.beta);
    }
    return v;
}

template <typename Scalar>
Var apply_batch_norm(Tape<Scalar>& t, Var x, BatchNormParam<Scalar>& p, const BatchNormVars& v,
                     const NormMode& mode) {
    return batch_norm(t, x, v.gamma, v.beta, &p.state, mode);
}

} // namespace msgdd

#endif
