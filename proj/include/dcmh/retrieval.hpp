#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcmh/core.hpp"
#include "dcmh/objective.hpp"

namespace dcmh {

/// Codes of m database (or query) points, one column each, with the id of
/// the point each column came from.
struct CodeDatabase {
    CodeMatrix codes;
    std::vector<std::uint64_t> ids;

    Index code_length() const { return codes.rows(); }
    Index size() const { return codes.cols(); }
    void validate() const {
        if (static_cast<Index>(ids.size()) != codes.cols())
            throw std::invalid_argument("CodeDatabase: " + std::to_string(ids.size()) +
                                        " ids for " + std::to_string(codes.cols()) + " codes");
    }

    friend bool operator==(const CodeDatabase&, const CodeDatabase&) = default;
};

/// relevance(q, d) = 1 when query q and database point d share a label.
struct GroundTruth {
    SimilarityMatrix relevance;
};

/// Number of positions where a and b differ.
template <typename DA, typename DB>
int hamming_distance(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("hamming_distance: code lengths differ (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    return static_cast<int>((a.derived().array() != b.derived().array()).count());
}

/// All query-database distances, computed as (c - Q^T D) / 2.
Matrix<int> hamming_distances(const CodeMatrix& queries, const CodeMatrix& database);

/// Database positions ordered by (distance ascending, position ascending).
std::vector<Index> rank_database(const CodeVector& query, const CodeDatabase& db);
std::vector<Index> rank_by_distance(std::span<const int> distances);

/// Average precision over the full ranking: mean of precision@k over the
/// ranks k that hold a relevant item. `relevant[p]` flags database position
/// p. Returns nullopt when no position is relevant. With top_k, only the
/// first top_k ranks count and the mean is over the relevant items found
/// there (0 if none).
std::optional<double> average_precision(std::span<const Index> ranking,
                                        std::span<const std::uint8_t> relevant,
                                        std::optional<std::size_t> top_k = std::nullopt);

struct MapResult {
    double map = 0.0;
    std::size_t evaluated = 0;  // queries with at least one relevant point
    std::size_t skipped = 0;    // queries with none; excluded from the mean
};

MapResult mean_average_precision(const CodeDatabase& queries, const CodeDatabase& db,
                                 const GroundTruth& truth,
                                 std::optional<std::size_t> top_k = std::nullopt);

/// Database positions within Hamming distance `radius` (ascending positions).
std::vector<Index> hash_lookup(const CodeVector& query, const CodeDatabase& db, int radius);

struct PRPoint {
    int radius = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

/// Micro pools retrieved / relevant counts over all queries before dividing.
/// Macro averages per-query precision (0 when nothing is retrieved) over all
/// queries and per-query recall over queries with a relevant point.
enum class Averaging { Micro, Macro };

/// Hash-lookup precision, recall and F-measure for radius 0..c.
std::vector<PRPoint> pr_curve(const CodeDatabase& queries, const CodeDatabase& db,
                              const GroundTruth& truth, Averaging averaging = Averaging::Micro);

enum class Task { ImageToText, TextToImage };

/// "Image → Text" or "Text → Image".
std::string_view task_label(Task t);

void write_pr_csv(std::ostream& out, Task task, Index code_length,
                  std::span<const PRPoint> curve);
void write_map_csv(std::ostream& out, Task task, Index code_length, const MapResult& result,
                   std::optional<std::size_t> top_k);

// Packed code file plus "<path>.ids" sidecar; byte layout in docs/formats.md.
void write_codes(std::ostream& out, const CodeMatrix& codes);
CodeMatrix read_codes(std::istream& in);
void save_code_database(const CodeDatabase& db, const std::string& path);
CodeDatabase load_code_database(const std::string& path);

}  // namespace dcmh
