#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dcmh/data.hpp"
#include "dcmh/net.hpp"
#include "dcmh/objective.hpp"
#include "dcmh/train.hpp"

namespace dcmh {

/// Everything needed to reuse a training run: both networks, the learned
/// training codes, the hyperparameters, the run seed and the data split the
/// training set came from.
struct Checkpoint {
    FeedForwardNet net_x;
    FeedForwardNet net_y;
    CodeMatrix B;
    Hyperparams hyper;
    std::uint64_t seed = 0;
    SplitSpec split;

    friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
        return a.net_x == b.net_x && a.net_y == b.net_y && a.B == b.B && a.hyper == b.hyper &&
               a.seed == b.seed && a.split.query_count == b.split.query_count &&
               a.split.train_count == b.split.train_count && a.split.seed == b.split.seed;
    }
};

Checkpoint make_checkpoint(const TrainState& state, std::uint64_t seed, const SplitSpec& split);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dcmh
