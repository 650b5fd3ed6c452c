// Library-level end to end: synth -> split -> train -> encode -> evaluate.

#include <gtest/gtest.h>

#include <filesystem>

#include "dcmh/checkpoint.hpp"
#include "dcmh/data.hpp"
#include "dcmh/retrieval.hpp"
#include "dcmh/train.hpp"
#include "oracles.hpp"

namespace {

using namespace dcmh;

CodeDatabase as_db(CodeMatrix codes, const std::vector<Index>& points) {
    CodeDatabase db{std::move(codes), {}};
    for (Index p : points) db.ids.push_back(static_cast<std::uint64_t>(p));
    return db;
}

struct Pipeline {
    MultiModalDataset data;
    Split parts;
    TrainState state;
};

Pipeline run_pipeline(const SynthSpec& synth, Index c, Index iters, std::uint64_t seed) {
    Pipeline p;
    p.data = synth_dataset(synth);
    p.parts = split(p.data, {synth.classes * synth.per_class / 4,
                             synth.classes * synth.per_class * 3 / 4, derive_seed(seed, 1)});
    const MultiModalDataset tr = subset(p.data, p.parts.train);
    Hyperparams h;
    h.code_length = c;
    h.outer_iters = iters;
    p.state = train(tr.image, tr.text, build_similarity(tr.labels, tr.labels),
                    {mlp_specs(synth.d_x, {64}, c), mlp_specs(synth.d_y, {64}, c)}, h,
                    Rng(derive_seed(seed, 2)));
    return p;
}

// Three classes sit on a long plateau (MAP near 0.8 through a few hundred
// iterations) before the codes separate.
TEST(Pipeline, ThreeClassesRetrieveAcrossModalities) {
    const Pipeline p = run_pipeline({3, 60, 16, 40, 0.1, 4, 32}, 12, 1000, 4);
    const MultiModalDataset q = subset(p.data, p.parts.query);
    const MultiModalDataset db = subset(p.data, p.parts.database);
    const GroundTruth truth{build_similarity(q.labels, db.labels)};
    const auto i2t = mean_average_precision(as_db(encode(p.state.net_x, q.image), p.parts.query),
                                            as_db(encode(p.state.net_y, db.text), p.parts.database),
                                            truth);
    const auto t2i = mean_average_precision(as_db(encode(p.state.net_y, q.text), p.parts.query),
                                            as_db(encode(p.state.net_x, db.image), p.parts.database),
                                            truth);
    EXPECT_EQ(i2t.evaluated, p.parts.query.size());
    EXPECT_GE(i2t.map, 0.95);
    EXPECT_GE(t2i.map, 0.95);
}

TEST(Pipeline, TrainingIsReproducible) {
    const Pipeline a = run_pipeline({2, 40, 8, 16, 0.2, 7, 16}, 6, 15, 3);
    const Pipeline b = run_pipeline({2, 40, 8, 16, 0.2, 7, 16}, 6, 15, 3);
    EXPECT_EQ(a.state.net_x, b.state.net_x);
    EXPECT_EQ(a.state.net_y, b.state.net_y);
    EXPECT_EQ(a.state.B, b.state.B);
    EXPECT_EQ(a.state.F, b.state.F);
}

TEST(Pipeline, CheckpointedNetsEncodeIdentically) {
    const Pipeline p = run_pipeline({2, 40, 8, 16, 0.2, 8, 16}, 6, 10, 5);
    const auto path = (std::filesystem::temp_directory_path() / "dcmh_pipeline.ckpt").string();
    save_checkpoint(make_checkpoint(p.state, 5, {20, 60, derive_seed(5, 1)}), path);
    const Checkpoint back = load_checkpoint(path);
    std::filesystem::remove(path);
    EXPECT_EQ(encode(back.net_x, p.data.image), encode(p.state.net_x, p.data.image));
    EXPECT_EQ(encode(back.net_y, p.data.text), encode(p.state.net_y, p.data.text));
}

// Random codes carry no information, so with two balanced classes every
// query's AP hovers around the fraction of relevant database points.
TEST(Pipeline, RandomCodeBaselineNearHalf) {
    const MultiModalDataset ds = synth_dataset({2, 100, 4, 4, 0.1, 1, 8});
    double sum = 0.0;
    const int trials = 40;
    for (int s = 0; s < trials; ++s) {
        const Split parts = split(ds, {50, 150, static_cast<std::uint64_t>(s)});
        const GroundTruth truth{build_similarity(subset(ds, parts.query).labels,
                                                 subset(ds, parts.database).labels)};
        Rng rng(1000 + static_cast<std::uint64_t>(s));
        const double map =
            mean_average_precision(as_db(oracle::random_codes(rng, 8, 50), parts.query),
                                   as_db(oracle::random_codes(rng, 8, 150), parts.database), truth)
                .map;
        EXPECT_NEAR(map, 0.5, 0.1) << "split seed " << s;
        sum += map;
    }
    EXPECT_NEAR(sum / trials, 0.5, 0.05);
}

}  // namespace
