#include "dcmh/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "binary_io.hpp"

namespace dcmh {

Matrix<int> hamming_distances(const CodeMatrix& queries, const CodeMatrix& database) {
    if (queries.rows() != database.rows())
        throw std::invalid_argument("hamming_distances: code lengths differ (" +
                                    std::to_string(queries.rows()) + " vs " +
                                    std::to_string(database.rows()) + ")");
    const Matrix<int> inner =
        queries.values().transpose().cast<int>() * database.values().cast<int>();
    return ((static_cast<int>(queries.rows()) - inner.array()) / 2).matrix();
}

std::vector<Index> rank_by_distance(std::span<const int> distances) {
    std::vector<Index> order(distances.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return distances[static_cast<std::size_t>(a)] < distances[static_cast<std::size_t>(b)];
    });
    return order;
}

std::vector<Index> rank_database(const CodeVector& query, const CodeDatabase& db) {
    if (query.size() != db.code_length())
        throw std::invalid_argument("rank_database: query has " + std::to_string(query.size()) +
                                    " bits, database codes have " +
                                    std::to_string(db.code_length()));
    std::vector<int> d(static_cast<std::size_t>(db.size()));
    for (Index p = 0; p < db.size(); ++p)
        d[static_cast<std::size_t>(p)] = hamming_distance(query, db.codes.col(p));
    return rank_by_distance(d);
}

std::optional<double> average_precision(std::span<const Index> ranking,
                                        std::span<const std::uint8_t> relevant,
                                        std::optional<std::size_t> top_k) {
    if (ranking.size() != relevant.size())
        throw std::invalid_argument("average_precision: ranking covers " +
                                    std::to_string(ranking.size()) + " items, relevance has " +
                                    std::to_string(relevant.size()));
    const auto total = std::count_if(relevant.begin(), relevant.end(),
                                     [](std::uint8_t r) { return r != 0; });
    if (total == 0) return std::nullopt;

    const std::size_t depth = top_k ? std::min(*top_k, ranking.size()) : ranking.size();
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < depth; ++k) {
        const auto p = static_cast<std::size_t>(ranking[k]);
        if (p >= relevant.size())
            throw std::invalid_argument("average_precision: ranking entry out of range");
        if (relevant[p]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (!top_k) return sum / static_cast<double>(total);
    return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

namespace {

void check_eval_inputs(const CodeDatabase& queries, const CodeDatabase& db,
                       const GroundTruth& truth) {
    queries.validate();
    db.validate();
    if (queries.code_length() != db.code_length())
        throw std::invalid_argument("query codes have " + std::to_string(queries.code_length()) +
                                    " bits, database codes have " +
                                    std::to_string(db.code_length()));
    if (truth.relevance.rows() != queries.size() || truth.relevance.cols() != db.size())
        throw std::invalid_argument("ground truth is " +
                                    std::to_string(truth.relevance.rows()) + "x" +
                                    std::to_string(truth.relevance.cols()) + ", expected " +
                                    std::to_string(queries.size()) + "x" +
                                    std::to_string(db.size()));
}

std::vector<std::uint8_t> relevance_row(const GroundTruth& truth, Index q) {
    std::vector<std::uint8_t> row(static_cast<std::size_t>(truth.relevance.cols()));
    for (Index p = 0; p < truth.relevance.cols(); ++p)
        row[static_cast<std::size_t>(p)] = truth.relevance(q, p);
    return row;
}

}  // namespace

MapResult mean_average_precision(const CodeDatabase& queries, const CodeDatabase& db,
                                 const GroundTruth& truth, std::optional<std::size_t> top_k) {
    check_eval_inputs(queries, db, truth);
    const Matrix<int> dist = hamming_distances(queries.codes, db.codes);

    MapResult result;
    double sum = 0.0;
    std::vector<int> row(static_cast<std::size_t>(db.size()));
    for (Index q = 0; q < queries.size(); ++q) {
        for (Index p = 0; p < db.size(); ++p) row[static_cast<std::size_t>(p)] = dist(q, p);
        const auto ranking = rank_by_distance(row);
        const auto ap = average_precision(ranking, relevance_row(truth, q), top_k);
        if (ap) {
            sum += *ap;
            ++result.evaluated;
        } else {
            ++result.skipped;
        }
    }
    if (result.evaluated == 0)
        throw std::invalid_argument("mean_average_precision: no query has a relevant point");
    result.map = sum / static_cast<double>(result.evaluated);
    return result;
}

std::vector<Index> hash_lookup(const CodeVector& query, const CodeDatabase& db, int radius) {
    if (query.size() != db.code_length())
        throw std::invalid_argument("hash_lookup: code length mismatch");
    if (radius < 0 || radius > db.code_length())
        throw std::invalid_argument("hash_lookup: radius " + std::to_string(radius) +
                                    " outside [0, " + std::to_string(db.code_length()) + "]");
    std::vector<Index> hits;
    for (Index p = 0; p < db.size(); ++p)
        if (hamming_distance(query, db.codes.col(p)) <= radius) hits.push_back(p);
    return hits;
}

namespace {

double f_measure(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

std::vector<PRPoint> pr_curve(const CodeDatabase& queries, const CodeDatabase& db,
                              const GroundTruth& truth, Averaging averaging) {
    check_eval_inputs(queries, db, truth);
    const int c = static_cast<int>(db.code_length());
    const auto radii = static_cast<std::size_t>(c + 1);
    const Matrix<int> dist = hamming_distances(queries.codes, db.codes);

    std::vector<double> pooled_retrieved(radii, 0.0), pooled_hits(radii, 0.0);
    std::vector<double> precision_sum(radii, 0.0), recall_sum(radii, 0.0);
    double pooled_relevant = 0.0;
    std::size_t queries_with_relevant = 0;

    std::vector<double> retrieved(radii), hits(radii);
    for (Index q = 0; q < queries.size(); ++q) {
        std::fill(retrieved.begin(), retrieved.end(), 0.0);
        std::fill(hits.begin(), hits.end(), 0.0);
        double relevant = 0.0;
        for (Index p = 0; p < db.size(); ++p) {
            const auto d = static_cast<std::size_t>(dist(q, p));
            retrieved[d] += 1.0;
            if (truth.relevance(q, p)) {
                hits[d] += 1.0;
                relevant += 1.0;
            }
        }
        // Histogram -> counts within radius r.
        for (std::size_t r = 1; r < radii; ++r) {
            retrieved[r] += retrieved[r - 1];
            hits[r] += hits[r - 1];
        }
        pooled_relevant += relevant;
        if (relevant > 0.0) ++queries_with_relevant;
        for (std::size_t r = 0; r < radii; ++r) {
            pooled_retrieved[r] += retrieved[r];
            pooled_hits[r] += hits[r];
            precision_sum[r] += retrieved[r] > 0.0 ? hits[r] / retrieved[r] : 0.0;
            if (relevant > 0.0) recall_sum[r] += hits[r] / relevant;
        }
    }

    std::vector<PRPoint> curve;
    for (std::size_t r = 0; r < radii; ++r) {
        PRPoint pt;
        pt.radius = static_cast<int>(r);
        if (averaging == Averaging::Micro) {
            pt.precision = pooled_retrieved[r] > 0.0 ? pooled_hits[r] / pooled_retrieved[r] : 0.0;
            pt.recall = pooled_relevant > 0.0 ? pooled_hits[r] / pooled_relevant : 0.0;
        } else {
            pt.precision = queries.size() > 0
                               ? precision_sum[r] / static_cast<double>(queries.size())
                               : 0.0;
            pt.recall = queries_with_relevant > 0
                            ? recall_sum[r] / static_cast<double>(queries_with_relevant)
                            : 0.0;
        }
        pt.f_measure = f_measure(pt.precision, pt.recall);
        curve.push_back(pt);
    }
    return curve;
}

std::string_view task_label(Task t) {
    return t == Task::ImageToText ? "Image \xE2\x86\x92 Text" : "Text \xE2\x86\x92 Image";
}

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

void write_pr_csv(std::ostream& out, Task task, Index code_length,
                  std::span<const PRPoint> curve) {
    out << "task,code_length,radius,precision,recall,f_measure\n";
    for (const auto& p : curve)
        out << task_label(task) << ',' << code_length << ',' << p.radius << ','
            << fixed6(p.precision) << ',' << fixed6(p.recall) << ',' << fixed6(p.f_measure)
            << '\n';
}

void write_map_csv(std::ostream& out, Task task, Index code_length, const MapResult& result,
                   std::optional<std::size_t> top_k) {
    out << "task,code_length,map,top_k,queries_evaluated,queries_skipped\n";
    out << task_label(task) << ',' << code_length << ',' << fixed6(result.map) << ','
        << (top_k ? std::to_string(*top_k) : std::string("all")) << ',' << result.evaluated
        << ',' << result.skipped << '\n';
}

// ---------------------------------------------------------------------------
// Code files

namespace {
constexpr std::string_view kCodeMagic = "DCMHCODE";
constexpr std::uint32_t kCodeVersion = 1;
}  // namespace

void write_codes(std::ostream& out, const CodeMatrix& codes) {
    const Index c = codes.rows();
    const auto bytes_per_code = static_cast<std::size_t>((c + 7) / 8);
    io::put_bytes(out, kCodeMagic.data(), kCodeMagic.size());
    io::put_u32(out, kCodeVersion);
    io::put_u32(out, static_cast<std::uint32_t>(c));
    io::put_u64(out, static_cast<std::uint64_t>(codes.cols()));
    std::vector<std::uint8_t> packed(bytes_per_code);
    for (Index j = 0; j < codes.cols(); ++j) {
        std::fill(packed.begin(), packed.end(), 0);
        for (Index k = 0; k < c; ++k)
            if (codes(k, j) > 0) packed[static_cast<std::size_t>(k / 8)] |= std::uint8_t(1u << (k % 8));
        io::put_bytes(out, packed.data(), packed.size());
    }
}

CodeMatrix read_codes(std::istream& in) {
    io::Reader r(in, "code file");
    r.magic(kCodeMagic);
    if (const auto v = r.u32("version"); v != kCodeVersion)
        r.fail("unsupported version " + std::to_string(v));
    const auto c = r.u32("code length");
    if (c == 0 || c > 65536) r.fail("implausible code length " + std::to_string(c));
    const auto m = r.u64("point count");
    if (m > (std::uint64_t{1} << 32)) r.fail("implausible point count " + std::to_string(m));

    const std::size_t bytes_per_code = (c + 7) / 8;
    CodeStorage values(static_cast<Index>(c), static_cast<Index>(m));
    std::vector<std::uint8_t> packed(bytes_per_code);
    for (std::uint64_t j = 0; j < m; ++j) {
        r.bytes(packed.data(), packed.size(), "code of point " + std::to_string(j));
        for (std::uint32_t k = 0; k < c; ++k)
            values(k, static_cast<Index>(j)) = (packed[k / 8] >> (k % 8)) & 1u ? 1 : -1;
        if (c % 8 != 0 && (packed.back() >> (c % 8)) != 0)
            r.fail("padding bits set in code of point " + std::to_string(j));
    }
    r.expect_end();
    return CodeMatrix(std::move(values));
}

void save_code_database(const CodeDatabase& db, const std::string& path) {
    db.validate();
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + path + " for writing");
        write_codes(out, db.codes);
        if (!out.flush()) throw std::runtime_error("failed writing " + path);
    }
    std::ofstream ids(path + ".ids", std::ios::binary);
    if (!ids) throw std::runtime_error("cannot open " + path + ".ids for writing");
    for (auto id : db.ids) ids << id << '\n';
    if (!ids.flush()) throw std::runtime_error("failed writing " + path + ".ids");
}

CodeDatabase load_code_database(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    CodeDatabase db;
    db.codes = read_codes(in);

    std::ifstream ids(path + ".ids");
    if (!ids) throw std::runtime_error("cannot open " + path + ".ids");
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(ids, line)) {
        ++lineno;
        std::size_t used = 0;
        std::uint64_t id = 0;
        try {
            id = std::stoull(line, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != line.size() || line.front() == '-')
            throw ParseError(path + ".ids: expected one unsigned id per line", lineno, 0);
        db.ids.push_back(id);
    }
    if (static_cast<Index>(db.ids.size()) != db.size())
        throw ParseError(path + ".ids: " + std::to_string(db.ids.size()) + " ids for " +
                             std::to_string(db.size()) + " codes",
                         lineno, 0);
    return db;
}

}  // namespace dcmh
