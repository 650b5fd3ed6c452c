#include "dcmh/train.hpp"

#include <algorithm>
#include <chrono>
#include <string>

namespace dcmh {
namespace {

void check_arch(const std::vector<LayerSpec>& specs, Index in_dim, Index code_length,
                const char* which) {
    const std::string name(which);
    if (specs.empty()) throw std::invalid_argument(name + " network has no layers");
    if (specs.front().in_dim != in_dim)
        throw std::invalid_argument(name + " network input is " +
                                    std::to_string(specs.front().in_dim) + ", features have " +
                                    std::to_string(in_dim) + " rows");
    if (specs.back().out_dim != code_length)
        throw std::invalid_argument(name + " network output must equal code_length " +
                                    std::to_string(code_length));
    if (specs.back().activation != Activation::Identity)
        throw std::invalid_argument(name + " network final layer must be Identity");
}

std::vector<std::vector<Index>> shuffled_batches(Rng& rng, Index n, Index batch_size) {
    const auto perm = rng.permutation(static_cast<std::size_t>(n));
    std::vector<std::vector<Index>> batches;
    for (Index start = 0; start < n; start += batch_size) {
        const Index end = std::min(n, start + batch_size);
        batches.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return batches;
}

double gradient_scale(GradientScale mode, Index n, std::size_t batch) {
    return mode == GradientScale::Sum ? 1.0 : 1.0 / (static_cast<double>(n) * batch);
}

}  // namespace

TrainState init_train_state(const DenseMatrix& X, const DenseMatrix& Y, const SimilarityMatrix& S,
                            const Architecture& arch, const Hyperparams& hyper, Rng rng) {
    hyper.validate();
    const Index n = X.cols();
    if (n < 1) throw std::invalid_argument("train: no training points");
    if (Y.cols() != n)
        throw std::invalid_argument("train: image and text sets differ in size (" +
                                    std::to_string(n) + " vs " + std::to_string(Y.cols()) + ")");
    if (S.rows() != n || S.cols() != n)
        throw std::invalid_argument("train: S must be " + std::to_string(n) + "x" +
                                    std::to_string(n));
    require_finite(X, "train: image features");
    require_finite(Y, "train: text features");
    check_arch(arch.image, X.rows(), hyper.code_length, "image");
    check_arch(arch.text, Y.rows(), hyper.code_length, "text");

    TrainState st;
    st.hyper = hyper;
    st.net_x = init_net(arch.image, rng);
    st.net_y = init_net(arch.text, rng);
    st.F = forward(st.net_x, X).outputs;
    st.G = forward(st.net_y, Y).outputs;
    st.B = update_B(st.F, st.G, hyper);
    st.rng = std::move(rng);
    st.initial = objective_terms(st.F, st.G, st.B, S, hyper);
    return st;
}

ObjectiveTerms run_outer_iteration(TrainState& st, const DenseMatrix& X, const DenseMatrix& Y,
                                   const SimilarityMatrix& S) {
    const Index n = X.cols();
    const Hyperparams& h = st.hyper;

    for (const auto& batch : shuffled_batches(st.rng, n, h.batch_size)) {
        auto fwd = forward(st.net_x, X(Eigen::all, batch));
        st.F(Eigen::all, batch) = fwd.outputs;
        const DenseMatrix dF = gradient_scale(h.grad_scale, n, batch.size()) *
                               grad_F_columns(batch, st.F, st.G, st.B, S, h);
        sgd_step(st.net_x, backward(st.net_x, fwd.trace, dF), h.lr);
    }
    for (const auto& batch : shuffled_batches(st.rng, n, h.batch_size)) {
        auto fwd = forward(st.net_y, Y(Eigen::all, batch));
        st.G(Eigen::all, batch) = fwd.outputs;
        const DenseMatrix dG = gradient_scale(h.grad_scale, n, batch.size()) *
                               grad_G_columns(batch, st.F, st.G, st.B, S, h);
        sgd_step(st.net_y, backward(st.net_y, fwd.trace, dG), h.lr);
    }
    st.B = update_B(st.F, st.G, h);
    ++st.iterations_done;
    return objective_terms(st.F, st.G, st.B, S, h);
}

TrainState train(const DenseMatrix& X, const DenseMatrix& Y, const SimilarityMatrix& S,
                 const Architecture& arch, const Hyperparams& hyper, Rng rng,
                 const IterationObserver& observer) {
    TrainState st = init_train_state(X, Y, S, arch, hyper, std::move(rng));
    for (Index it = 1; it <= hyper.outer_iters; ++it) {
        const auto t0 = std::chrono::steady_clock::now();
        ObjectiveTerms terms;
        try {
            terms = run_outer_iteration(st, X, Y, S);
        } catch (const NumericError& e) {
            throw NumericError("outer iteration " + std::to_string(it) + ": " + e.what());
        }
        if (!std::isfinite(terms.total()))
            throw NumericError("outer iteration " + std::to_string(it) +
                               ": objective is not finite");
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (observer) observer({it, terms, secs});
    }
    return st;
}

CodeMatrix encode(const FeedForwardNet& net, const DenseMatrix& inputs) {
    return sign_matrix(forward(net, inputs).outputs);
}

CodeVector encode_image(const FeedForwardNet& net_x, const DenseVector& x) {
    return encode(net_x, x).col(0);
}

CodeVector encode_text(const FeedForwardNet& net_y, const DenseVector& y) {
    return encode(net_y, y).col(0);
}

}  // namespace dcmh
