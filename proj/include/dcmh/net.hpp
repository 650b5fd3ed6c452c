#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcmh/core.hpp"
#include "dcmh/rng.hpp"

namespace dcmh {

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1 };

struct LayerSpec {
    Index in_dim = 1;
    Index out_dim = 1;
    Activation activation = Activation::Identity;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

template <typename Scalar>
struct DenseLayer {
    Matrix<Scalar> weights;  // out_dim x in_dim
    Vector<Scalar> bias;     // out_dim
    Activation activation = Activation::Identity;

    Index in_dim() const { return weights.cols(); }
    Index out_dim() const { return weights.rows(); }
    LayerSpec spec() const { return {in_dim(), out_dim(), activation}; }
};

/// Fully-connected network mapping one column per sample. Layer k's output
/// dimension always equals layer k+1's input dimension.
template <typename Scalar>
class BasicFeedForwardNet {
public:
    using Layer = DenseLayer<Scalar>;

    BasicFeedForwardNet() = default;

    explicit BasicFeedForwardNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            const Layer& l = layers_[k];
            if (l.in_dim() < 1 || l.out_dim() < 1 || l.bias.size() != l.out_dim())
                throw std::invalid_argument("layer " + std::to_string(k) + " has invalid shape");
            if (k > 0 && layers_[k - 1].out_dim() != l.in_dim())
                throw std::invalid_argument("layer " + std::to_string(k) +
                                            " input does not match previous output");
        }
    }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    std::size_t depth() const { return layers_.size(); }
    Index input_dim() const { return layers_.front().in_dim(); }
    Index output_dim() const { return layers_.back().out_dim(); }

    std::vector<LayerSpec> specs() const {
        std::vector<LayerSpec> s;
        for (const auto& l : layers_) s.push_back(l.spec());
        return s;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
        return n;
    }

    friend bool operator==(const BasicFeedForwardNet& a, const BasicFeedForwardNet& b) {
        if (a.layers_.size() != b.layers_.size()) return false;
        for (std::size_t k = 0; k < a.layers_.size(); ++k) {
            const Layer& x = a.layers_[k];
            const Layer& y = b.layers_[k];
            if (x.spec() != y.spec() || x.weights != y.weights || x.bias != y.bias) return false;
        }
        return true;
    }

private:
    std::vector<Layer> layers_;
};

using FeedForwardNet = BasicFeedForwardNet<double>;

/// Activations kept from a forward pass for use by backward().
template <typename Scalar>
struct ForwardTrace {
    Matrix<Scalar> inputs;
    std::vector<Matrix<Scalar>> pre;   // W a + b, per layer
    std::vector<Matrix<Scalar>> post;  // activation(pre), per layer

    std::size_t depth() const { return pre.size(); }
};

template <typename Scalar>
struct ForwardResult {
    Matrix<Scalar> outputs;
    ForwardTrace<Scalar> trace;
};

template <typename Scalar>
struct LayerGrad {
    Matrix<Scalar> weights;
    Vector<Scalar> bias;
};

template <typename Scalar>
struct ParamGrads {
    std::vector<LayerGrad<Scalar>> layers;
};

template <typename Derived>
void apply_activation(Eigen::MatrixBase<Derived>& m, Activation a) {
    if (a == Activation::ReLU) m = m.cwiseMax(typename Derived::Scalar(0));
}

/// Runs the network on a d x m batch; column i of the output is the network
/// applied to column i of the input.
template <typename Scalar, typename Derived>
ForwardResult<Scalar> forward(const BasicFeedForwardNet<Scalar>& net,
                              const Eigen::MatrixBase<Derived>& inputs) {
    if (net.depth() == 0) throw InvalidState("forward: empty network");
    if (inputs.rows() != net.input_dim())
        throw std::invalid_argument("forward: input has " + std::to_string(inputs.rows()) +
                                    " rows, network expects " +
                                    std::to_string(net.input_dim()));
    require_finite(inputs, "forward input");

    ForwardResult<Scalar> r;
    r.trace.inputs = inputs;
    const Matrix<Scalar>* a = &r.trace.inputs;
    for (const auto& layer : net.layers()) {
        Matrix<Scalar> z = layer.weights * *a;
        z.colwise() += layer.bias;
        Matrix<Scalar> h = z;
        apply_activation(h, layer.activation);
        r.trace.pre.push_back(std::move(z));
        r.trace.post.push_back(std::move(h));
        a = &r.trace.post.back();
    }
    r.outputs = r.trace.post.back();
    require_finite(r.outputs, "forward output");
    return r;
}

/// Gradients of a scalar loss with respect to every weight and bias, given
/// the loss gradient with respect to the outputs. Sums over batch columns.
template <typename Scalar, typename Derived>
ParamGrads<Scalar> backward(const BasicFeedForwardNet<Scalar>& net,
                            const ForwardTrace<Scalar>& trace,
                            const Eigen::MatrixBase<Derived>& output_grad) {
    const auto& layers = net.layers();
    if (trace.depth() != layers.size() || trace.post.size() != layers.size())
        throw InvalidState("backward: trace depth does not match network");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (trace.pre[k].rows() != layers[k].out_dim() ||
            trace.pre[k].cols() != trace.inputs.cols())
            throw InvalidState("backward: trace layer " + std::to_string(k) +
                               " does not match network");
    }
    if (trace.inputs.rows() != net.input_dim())
        throw InvalidState("backward: trace input does not match network");
    if (output_grad.rows() != net.output_dim() || output_grad.cols() != trace.inputs.cols())
        throw std::invalid_argument("backward: output gradient shape mismatch");

    ParamGrads<Scalar> grads;
    grads.layers.resize(layers.size());
    Matrix<Scalar> delta = output_grad;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const auto& layer = layers[k];
        if (layer.activation == Activation::ReLU)
            delta = (trace.pre[k].array() > Scalar(0)).select(delta, Scalar(0));
        const Matrix<Scalar>& below = k == 0 ? trace.inputs : trace.post[k - 1];
        grads.layers[k].weights = delta * below.transpose();
        grads.layers[k].bias = delta.rowwise().sum();
        if (k > 0) delta = layer.weights.transpose() * delta;
    }
    return grads;
}

/// p <- p - lr * grad(p) for every parameter.
template <typename Scalar>
void sgd_step(BasicFeedForwardNet<Scalar>& net, const ParamGrads<Scalar>& grads, Scalar lr) {
    if (!(lr > Scalar(0))) throw std::invalid_argument("sgd_step: learning rate must be > 0");
    auto& layers = net.layers();
    if (grads.layers.size() != layers.size())
        throw std::invalid_argument("sgd_step: gradient depth mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& g = grads.layers[k];
        if (g.weights.rows() != layers[k].weights.rows() ||
            g.weights.cols() != layers[k].weights.cols() || g.bias.size() != layers[k].bias.size())
            throw std::invalid_argument("sgd_step: gradient shape mismatch at layer " +
                                        std::to_string(k));
        if (!g.weights.allFinite() || !g.bias.allFinite())
            throw NumericError("sgd_step: non-finite gradient at layer " + std::to_string(k));
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].weights -= lr * grads.layers[k].weights;
        layers[k].bias -= lr * grads.layers[k].bias;
    }
}

/// Glorot-uniform weights in [-s, s], s = sqrt(6 / (in + out)); zero biases.
/// Weights are drawn layer by layer in row-major order.
template <typename Scalar = double>
BasicFeedForwardNet<Scalar> init_net(const std::vector<LayerSpec>& specs, Rng& rng) {
    if (specs.empty()) throw std::invalid_argument("init_net: empty layer list");
    std::vector<DenseLayer<Scalar>> layers;
    for (const auto& s : specs) {
        if (s.in_dim < 1 || s.out_dim < 1)
            throw std::invalid_argument("init_net: layer dimensions must be >= 1");
        const double bound = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
        DenseLayer<Scalar> l;
        l.weights.resize(s.out_dim, s.in_dim);
        for (Index r = 0; r < s.out_dim; ++r)
            for (Index c = 0; c < s.in_dim; ++c)
                l.weights(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
        l.bias = Vector<Scalar>::Zero(s.out_dim);
        l.activation = s.activation;
        layers.push_back(std::move(l));
    }
    return BasicFeedForwardNet<Scalar>(std::move(layers));
}

/// ReLU hidden layers of the given widths followed by an Identity output layer.
std::vector<LayerSpec> mlp_specs(Index in_dim, const std::vector<Index>& hidden, Index out_dim);

// Checkpoint I/O for double-precision networks; byte layout in docs/formats.md.
void write_net(std::ostream& out, const FeedForwardNet& net);
FeedForwardNet read_net(std::istream& in);
void save_net(const std::string& path, const FeedForwardNet& net);
FeedForwardNet load_net(const std::string& path);

}  // namespace dcmh
