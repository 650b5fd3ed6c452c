#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is written with plain loops over scalars so that it
// shares no code path with the library it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <tuple>
#include <vector>

#include "dcmh/core.hpp"
#include "dcmh/net.hpp"
#include "dcmh/objective.hpp"
#include "dcmh/rng.hpp"

namespace oracle {

using dcmh::CodeMatrix;
using dcmh::DenseMatrix;
using dcmh::Hyperparams;
using dcmh::Index;
using dcmh::SimilarityMatrix;

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

// log(1 + e^x) in extended precision; the branch keeps exp() in range.
inline long double log1pexp(long double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct Terms {
    long double likelihood = 0, quantization = 0, balance = 0;
    long double total() const { return likelihood + quantization + balance; }
};

/// The objective summed term by term, in long double.
inline Terms objective(const DenseMatrix& F, const DenseMatrix& G, const CodeMatrix& B,
                       const SimilarityMatrix& S, const Hyperparams& h) {
    const Index c = F.rows(), nx = F.cols(), ny = G.cols();
    Terms t;
    for (Index i = 0; i < nx; ++i)
        for (Index j = 0; j < ny; ++j) {
            long double dot = 0;
            for (Index k = 0; k < c; ++k) dot += static_cast<long double>(F(k, i)) * G(k, j);
            const long double th = dot / 2;
            t.likelihood += log1pexp(th) - S(i, j) * th;
        }
    for (Index k = 0; k < c; ++k)
        for (Index i = 0; i < nx; ++i) {
            const long double d = static_cast<long double>(B(k, i)) - F(k, i);
            t.quantization += d * d;
        }
    for (Index k = 0; k < c; ++k)
        for (Index j = 0; j < ny; ++j) {
            const long double d = static_cast<long double>(B(k, j)) - G(k, j);
            t.quantization += d * d;
        }
    t.quantization *= h.gamma;
    for (Index k = 0; k < c; ++k) {
        long double rf = 0, rg = 0;
        for (Index i = 0; i < nx; ++i) rf += F(k, i);
        for (Index j = 0; j < ny; ++j) rg += G(k, j);
        t.balance += rf * rf + rg * rg;
    }
    t.balance *= h.eta;
    return t;
}

/// Central difference of f at x along every coordinate.
inline std::vector<double> central_diff(const std::function<long double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double step) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = x[k];
        x[k] = orig + step;
        const long double up = f(x);
        x[k] = orig - step;
        const long double down = f(x);
        x[k] = orig;
        g[k] = static_cast<double>((up - down) / (2.0L * step));
    }
    return g;
}

/// dJ/dF_*i (or dJ/dG_*i when `wrt_g`) by central differences.
inline dcmh::DenseVector fd_column(const DenseMatrix& F, const DenseMatrix& G, const CodeMatrix& B,
                                   const SimilarityMatrix& S, const Hyperparams& h, Index col,
                                   bool wrt_g, double step = 1e-5) {
    const DenseMatrix& M = wrt_g ? G : F;
    std::vector<double> x(static_cast<std::size_t>(M.rows()));
    for (Index k = 0; k < M.rows(); ++k) x[static_cast<std::size_t>(k)] = M(k, col);
    const auto f = [&](const std::vector<double>& v) {
        DenseMatrix Fp = F, Gp = G;
        DenseMatrix& target = wrt_g ? Gp : Fp;
        for (Index k = 0; k < target.rows(); ++k) target(k, col) = v[static_cast<std::size_t>(k)];
        return objective(Fp, Gp, B, S, h).total();
    };
    const auto g = central_diff(f, x, step);
    return Eigen::Map<const dcmh::DenseVector>(g.data(), static_cast<Index>(g.size()));
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
template <typename A, typename B>
double rel_error(const A& a, const B& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// max tr(B^T V) over every B in {-1, +1}^{c x n}, by enumeration.
inline double exhaustive_trace_max(const DenseMatrix& V) {
    const auto cells = static_cast<unsigned>(V.size());
    double best = -INFINITY;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cells); ++mask) {
        double s = 0.0;
        for (unsigned k = 0; k < cells; ++k) {
            const double v = V(k / V.cols(), k % V.cols());
            s += (mask >> k) & 1 ? v : -v;
        }
        best = std::max(best, s);
    }
    return best;
}

/// Network output for one sample, scalar loops only.
inline std::vector<double> forward_sample(const dcmh::FeedForwardNet& net, std::vector<double> a) {
    for (const auto& layer : net.layers()) {
        std::vector<double> z(static_cast<std::size_t>(layer.out_dim()));
        for (Index r = 0; r < layer.out_dim(); ++r) {
            double s = layer.bias(r);
            for (Index c = 0; c < layer.in_dim(); ++c) s += layer.weights(r, c) * a[c];
            z[r] = layer.activation == dcmh::Activation::ReLU ? (s > 0 ? s : 0.0) : s;
        }
        a = std::move(z);
    }
    return a;
}

inline DenseMatrix forward(const dcmh::FeedForwardNet& net, const DenseMatrix& inputs) {
    DenseMatrix out(net.output_dim(), inputs.cols());
    for (Index j = 0; j < inputs.cols(); ++j) {
        std::vector<double> x(static_cast<std::size_t>(inputs.rows()));
        for (Index k = 0; k < inputs.rows(); ++k) x[k] = inputs(k, j);
        const auto y = forward_sample(net, x);
        for (Index k = 0; k < out.rows(); ++k) out(k, j) = y[k];
    }
    return out;
}

/// All parameters flattened layer by layer: weights row-major, then bias.
inline std::vector<double> flatten(const dcmh::FeedForwardNet& net) {
    std::vector<double> p;
    for (const auto& l : net.layers()) {
        for (Index r = 0; r < l.weights.rows(); ++r)
            for (Index c = 0; c < l.weights.cols(); ++c) p.push_back(l.weights(r, c));
        for (Index r = 0; r < l.bias.size(); ++r) p.push_back(l.bias(r));
    }
    return p;
}

inline dcmh::FeedForwardNet unflatten(dcmh::FeedForwardNet net, const std::vector<double>& p) {
    std::size_t k = 0;
    for (auto& l : net.layers()) {
        for (Index r = 0; r < l.weights.rows(); ++r)
            for (Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = p[k++];
        for (Index r = 0; r < l.bias.size(); ++r) l.bias(r) = p[k++];
    }
    return net;
}

inline std::vector<double> flatten(const dcmh::ParamGrads<double>& g) {
    std::vector<double> p;
    for (const auto& l : g.layers) {
        for (Index r = 0; r < l.weights.rows(); ++r)
            for (Index c = 0; c < l.weights.cols(); ++c) p.push_back(l.weights(r, c));
        for (Index r = 0; r < l.bias.size(); ++r) p.push_back(l.bias(r));
    }
    return p;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - b[k]) * (a[k] - b[k]);
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(num) / scale;
}

// ---------------------------------------------------------------------------
// Retrieval

inline int hamming(const CodeMatrix& a, Index ca, const CodeMatrix& b, Index cb) {
    int d = 0;
    for (Index k = 0; k < a.rows(); ++k) d += a(k, ca) != b(k, cb);
    return d;
}

/// Database positions sorted by (distance, position).
inline std::vector<Index> ranking(const CodeMatrix& q, Index col, const CodeMatrix& db) {
    std::vector<std::tuple<int, Index>> keyed;
    for (Index p = 0; p < db.cols(); ++p) keyed.emplace_back(hamming(q, col, db, p), p);
    std::sort(keyed.begin(), keyed.end());
    std::vector<Index> out;
    for (const auto& [d, p] : keyed) out.push_back(p);
    return out;
}

/// Mean of precision@k over relevant ranks; -1 when nothing is relevant.
inline double average_precision(const std::vector<Index>& rank, const std::vector<bool>& rel) {
    double relevant = 0;
    for (bool r : rel) relevant += r;
    if (relevant == 0) return -1.0;
    double sum = 0, hits = 0;
    for (std::size_t k = 0; k < rank.size(); ++k)
        if (rel[static_cast<std::size_t>(rank[k])]) {
            hits += 1;
            sum += hits / static_cast<double>(k + 1);
        }
    return sum / relevant;
}

inline std::vector<bool> relevance_row(const SimilarityMatrix& truth, Index q) {
    std::vector<bool> rel;
    for (Index p = 0; p < truth.cols(); ++p) rel.push_back(truth(q, p) != 0);
    return rel;
}

/// MAP over queries with a relevant point; -1 if there are none.
inline double mean_average_precision(const CodeMatrix& q, const CodeMatrix& db,
                                     const SimilarityMatrix& truth) {
    double sum = 0;
    std::size_t used = 0;
    for (Index i = 0; i < q.cols(); ++i) {
        const double ap = average_precision(ranking(q, i, db), relevance_row(truth, i));
        if (ap >= 0) {
            sum += ap;
            ++used;
        }
    }
    return used ? sum / static_cast<double>(used) : -1.0;
}

struct PR {
    double precision, recall, f;
};

/// Pooled-count precision/recall/F at radius r.
inline PR pooled_pr(const CodeMatrix& q, const CodeMatrix& db, const SimilarityMatrix& truth,
                    int r) {
    double retrieved = 0, hits = 0, relevant = 0;
    for (Index i = 0; i < q.cols(); ++i)
        for (Index p = 0; p < db.cols(); ++p) {
            const bool in = hamming(q, i, db, p) <= r;
            const bool rel = truth(i, p) != 0;
            retrieved += in;
            hits += in && rel;
            relevant += rel;
        }
    PR out{};
    out.precision = retrieved > 0 ? hits / retrieved : 0.0;
    out.recall = relevant > 0 ? hits / relevant : 0.0;
    out.f = out.precision + out.recall > 0
                ? 2 * out.precision * out.recall / (out.precision + out.recall)
                : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Random instances

inline DenseMatrix normal_matrix(dcmh::Rng& rng, Index rows, Index cols, double scale = 1.0) {
    DenseMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

inline CodeMatrix random_codes(dcmh::Rng& rng, Index rows, Index cols) {
    CodeMatrix b(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) b.set(i, j, rng.below(2) == 1);
    return b;
}

inline SimilarityMatrix random_similarity(dcmh::Rng& rng, Index rows, Index cols) {
    SimilarityMatrix s(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) s(i, j) = static_cast<std::uint8_t>(rng.below(2));
    return s;
}

}  // namespace oracle
