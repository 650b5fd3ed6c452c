#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dcmh/core.hpp"
#include "dcmh/net.hpp"
#include "dcmh/objective.hpp"
#include "dcmh/rng.hpp"

namespace dcmh {

/// Layer stacks for the image network f(.; theta_x) and the text network
/// g(.; theta_y). Both must end in an Identity layer of width code_length.
struct Architecture {
    std::vector<LayerSpec> image;
    std::vector<LayerSpec> text;
};

/// Full optimizer state. F and G cache the latest network output for every
/// training point; a column is refreshed whenever its point is in a batch.
struct TrainState {
    FeedForwardNet net_x;
    FeedForwardNet net_y;
    DenseMatrix F;  // c x n
    DenseMatrix G;  // c x n
    CodeMatrix B;   // c x n
    Hyperparams hyper;
    Rng rng;
    ObjectiveTerms initial;  // objective after initialization, before the first iteration
    Index iterations_done = 0;
};

struct IterationLog {
    Index iteration = 0;  // 1-based
    ObjectiveTerms terms;
    double seconds = 0.0;  // wall time of this outer iteration
};

using IterationObserver = std::function<void(const IterationLog&)>;

/// Builds the nets, fills the F/G caches with one full forward pass and sets
/// B = sign(F + G). Draws net_x weights, then net_y weights, from `rng`.
TrainState init_train_state(const DenseMatrix& X, const DenseMatrix& Y, const SimilarityMatrix& S,
                            const Architecture& arch, const Hyperparams& hyper, Rng rng);

/// One outer iteration: a full image pass over shuffled mini-batches, a full
/// text pass, then the B update. Returns the objective on the caches.
ObjectiveTerms run_outer_iteration(TrainState& state, const DenseMatrix& X, const DenseMatrix& Y,
                                   const SimilarityMatrix& S);

/// Alternating optimization for hyper.outer_iters iterations. Throws
/// NumericError naming the iteration if the objective stops being finite.
TrainState train(const DenseMatrix& X, const DenseMatrix& Y, const SimilarityMatrix& S,
                 const Architecture& arch, const Hyperparams& hyper, Rng rng,
                 const IterationObserver& observer = {});

/// Out-of-sample codes: sign of the forward output, one column per input column.
CodeMatrix encode(const FeedForwardNet& net, const DenseMatrix& inputs);
CodeVector encode_image(const FeedForwardNet& net_x, const DenseVector& x);
CodeVector encode_text(const FeedForwardNet& net_y, const DenseVector& y);

}  // namespace dcmh
