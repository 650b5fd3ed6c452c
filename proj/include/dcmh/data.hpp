#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dcmh/core.hpp"
#include "dcmh/objective.hpp"

namespace dcmh {

/// Sorted, duplicate-free label ids.
using LabelSet = std::vector<std::uint32_t>;

/// Paired two-modality data, one column per point.
struct MultiModalDataset {
    DenseMatrix image;  // d_x x n
    DenseMatrix text;   // d_y x n, bag-of-words counts
    std::vector<LabelSet> labels;
    std::vector<std::string> label_names;  // vocabulary, indexed by label id

    Index size() const { return image.cols(); }

    /// Throws std::invalid_argument if the fields disagree on n, text has a
    /// negative entry, a label id is outside the vocabulary, or a label set
    /// is not sorted and unique.
    void validate() const;

    friend bool operator==(const MultiModalDataset&, const MultiModalDataset&) = default;
};

/// S_ij = 1 iff labels_a[i] and labels_b[j] intersect.
SimilarityMatrix build_similarity(std::span<const LabelSet> labels_a,
                                  std::span<const LabelSet> labels_b);

struct SplitSpec {
    Index query_count = 0;
    Index train_count = 0;
    std::uint64_t seed = 0;
};

/// Point indices (ascending) of each part. query and database partition the
/// dataset; train is a subset of database.
struct Split {
    std::vector<Index> query;
    std::vector<Index> database;
    std::vector<Index> train;
};

Split split(Index n, const SplitSpec& spec);
inline Split split(const MultiModalDataset& ds, const SplitSpec& spec) {
    return split(ds.size(), spec);
}

MultiModalDataset subset(const MultiModalDataset& ds, std::span<const Index> points);

struct SynthSpec {
    Index classes = 2;
    Index per_class = 100;
    Index d_x = 32;
    Index d_y = 64;
    double noise = 0.1;
    std::uint64_t seed = 0;
    Index words_per_doc = 32;
};

/// Synthetic paired data. Each class gets a unit-norm Gaussian image centroid
/// and a random word distribution over d_y terms. A point's image feature is
/// its centroid plus N(0, noise^2) per dimension; its text is words_per_doc
/// draws from the class distribution, counted. Points are laid out class by
/// class, each with the single label of its class.
MultiModalDataset synth_dataset(const SynthSpec& spec);

/// Per-class image centroids of the synthetic generator for a given spec
/// (columns), drawn exactly as synth_dataset draws them.
DenseMatrix synth_centroids(const SynthSpec& spec);

// Dataset file, byte layout in docs/formats.md.
void write_dataset(std::ostream& out, const MultiModalDataset& ds);
MultiModalDataset read_dataset(std::istream& in);
void save_dataset(const MultiModalDataset& ds, const std::string& path);
MultiModalDataset load_dataset(const std::string& path);

}  // namespace dcmh
