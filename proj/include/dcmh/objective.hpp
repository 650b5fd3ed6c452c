#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "dcmh/core.hpp"

namespace dcmh {

/// n_x x n_y matrix over {0, 1}; entry (i, j) is 1 when image i and text j
/// are similar.
using SimilarityMatrix = Matrix<std::uint8_t>;

/// How a mini-batch's output gradients are scaled before backpropagation.
/// Sum uses dJ/dF_*i exactly as derived. PointBatchMean divides by
/// n * batch_size, which keeps lr on the same scale for any n and batch.
enum class GradientScale : std::uint8_t { Sum = 0, PointBatchMean = 1 };

struct Hyperparams {
    double gamma = 1.0;  // quantization weight
    double eta = 1.0;    // bit-balance weight
    Index code_length = 16;
    Index batch_size = 128;
    Index outer_iters = 500;
    double lr = 0.01;
    GradientScale grad_scale = GradientScale::PointBatchMean;

    void validate() const {
        if (!(gamma >= 0.0) || !std::isfinite(gamma))
            throw std::invalid_argument("gamma must be finite and >= 0");
        if (!(eta >= 0.0) || !std::isfinite(eta))
            throw std::invalid_argument("eta must be finite and >= 0");
        if (code_length < 1) throw std::invalid_argument("code_length must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (outer_iters < 1) throw std::invalid_argument("outer_iters must be >= 1");
        if (!(lr > 0.0) || !std::isfinite(lr))
            throw std::invalid_argument("lr must be finite and > 0");
    }

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Selects which objective terms a gradient includes. Training always uses
/// All; the subsets exist to probe the terms in isolation.
enum Terms : unsigned {
    kLikelihood = 1u,
    kQuantization = 2u,
    kBalance = 4u,
    kAllTerms = kLikelihood | kQuantization | kBalance,
};

struct ObjectiveTerms {
    double likelihood = 0.0;    // negative log likelihood of S
    double quantization = 0.0;  // gamma (|B - F|^2 + |B - G|^2)
    double balance = 0.0;       // eta (|F 1|^2 + |G 1|^2)

    double total() const { return likelihood + quantization + balance; }
};

namespace detail {

template <typename DF, typename DG>
void check_pair(const Eigen::MatrixBase<DF>& F, const Eigen::MatrixBase<DG>& G,
                const char* where) {
    if (F.rows() != G.rows())
        throw std::invalid_argument(std::string(where) + ": F has " + std::to_string(F.rows()) +
                                    " rows, G has " + std::to_string(G.rows()));
}

template <typename DF, typename DG>
void check_problem(const Eigen::MatrixBase<DF>& F, const Eigen::MatrixBase<DG>& G,
                   const CodeMatrix& B, const SimilarityMatrix& S, const char* where) {
    check_pair(F, G, where);
    if (S.rows() != F.cols() || S.cols() != G.cols())
        throw std::invalid_argument(std::string(where) + ": S is " + std::to_string(S.rows()) +
                                    "x" + std::to_string(S.cols()) + ", expected " +
                                    std::to_string(F.cols()) + "x" + std::to_string(G.cols()));
    if (B.rows() != F.rows() || B.cols() != F.cols() || B.cols() != G.cols())
        throw std::invalid_argument(std::string(where) + ": B shape does not match F and G");
}

}  // namespace detail

/// Pairwise half inner products: Theta = 1/2 F^T G.
template <typename DF, typename DG>
Matrix<typename DF::Scalar> theta(const Eigen::MatrixBase<DF>& F,
                                  const Eigen::MatrixBase<DG>& G) {
    detail::check_pair(F, G, "theta");
    using Scalar = typename DF::Scalar;
    return Scalar(0.5) * (F.transpose() * G);
}

/// The three terms of the reduced objective, evaluated on the given F, G, B.
template <typename DF, typename DG>
ObjectiveTerms objective_terms(const Eigen::MatrixBase<DF>& F, const Eigen::MatrixBase<DG>& G,
                               const CodeMatrix& B, const SimilarityMatrix& S,
                               const Hyperparams& hyper) {
    detail::check_problem(F, G, B, S, "objective");
    using Scalar = typename DF::Scalar;
    const Matrix<Scalar> th = theta(F, G);
    const Matrix<Scalar> b = B.values().template cast<Scalar>();

    ObjectiveTerms t;
    t.likelihood = static_cast<double>(
        (th.unaryExpr([](Scalar x) { return softplus(x); }) -
         S.template cast<Scalar>().cwiseProduct(th))
            .sum());
    t.quantization =
        hyper.gamma * static_cast<double>((b - F).squaredNorm() + (b - G).squaredNorm());
    t.balance = hyper.eta * static_cast<double>(F.rowwise().sum().squaredNorm() +
                                                G.rowwise().sum().squaredNorm());
    return t;
}

template <typename DF, typename DG>
double objective(const Eigen::MatrixBase<DF>& F, const Eigen::MatrixBase<DG>& G,
                 const CodeMatrix& B, const SimilarityMatrix& S, const Hyperparams& hyper) {
    return objective_terms(F, G, B, S, hyper).total();
}

/// dJ/dF for the listed columns of F, one output column per entry of `cols`:
///   1/2 sum_j (sigma(Theta_ij) - S_ij) G_*j + 2 gamma (F_*i - B_*i) + 2 eta F 1
/// F 1 is the row sum of the full F, so every column gets the same balance
/// contribution.
template <typename DF, typename DG, typename IndexList>
Matrix<typename DF::Scalar> grad_F_columns(const IndexList& cols, const Eigen::MatrixBase<DF>& F,
                                           const Eigen::MatrixBase<DG>& G, const CodeMatrix& B,
                                           const SimilarityMatrix& S, const Hyperparams& hyper,
                                           unsigned terms = kAllTerms) {
    detail::check_problem(F, G, B, S, "grad_F");
    using Scalar = typename DF::Scalar;
    for (auto i : cols)
        if (static_cast<Index>(i) < 0 || static_cast<Index>(i) >= F.cols())
            throw std::invalid_argument("grad_F: column " + std::to_string(i) + " out of range");

    const Index m = static_cast<Index>(cols.size());
    Matrix<Scalar> grad = Matrix<Scalar>::Zero(F.rows(), m);
    const Matrix<Scalar> Fb = F(Eigen::all, cols);
    if (terms & kLikelihood) {
        // Rows of sigma(Theta) - S for the selected points, transposed to n x m.
        Matrix<Scalar> residual = Scalar(0.5) * (G.transpose() * Fb);
        const auto Sb = S(cols, Eigen::all);
        for (Index r = 0; r < residual.rows(); ++r)
            for (Index k = 0; k < m; ++k)
                residual(r, k) = sigmoid(residual(r, k)) - Scalar(Sb(k, r));
        grad.noalias() += Scalar(0.5) * G * residual;
    }
    if (terms & kQuantization) {
        const Matrix<Scalar> Bb = B.values()(Eigen::all, cols).template cast<Scalar>();
        grad += Scalar(2 * hyper.gamma) * (Fb - Bb);
    }
    if (terms & kBalance) {
        const Vector<Scalar> row_sum = F.rowwise().sum();
        grad.colwise() += Scalar(2 * hyper.eta) * row_sum;
    }
    return grad;
}

/// dJ/dG for the listed columns of G; mirror of grad_F_columns with the
/// roles of F and G (and of the rows and columns of S) swapped.
template <typename DF, typename DG, typename IndexList>
Matrix<typename DF::Scalar> grad_G_columns(const IndexList& cols, const Eigen::MatrixBase<DF>& F,
                                           const Eigen::MatrixBase<DG>& G, const CodeMatrix& B,
                                           const SimilarityMatrix& S, const Hyperparams& hyper,
                                           unsigned terms = kAllTerms) {
    detail::check_problem(F, G, B, S, "grad_G");
    using Scalar = typename DF::Scalar;
    for (auto j : cols)
        if (static_cast<Index>(j) < 0 || static_cast<Index>(j) >= G.cols())
            throw std::invalid_argument("grad_G: column " + std::to_string(j) + " out of range");

    const Index m = static_cast<Index>(cols.size());
    Matrix<Scalar> grad = Matrix<Scalar>::Zero(G.rows(), m);
    const Matrix<Scalar> Gb = G(Eigen::all, cols);
    if (terms & kLikelihood) {
        Matrix<Scalar> residual = Scalar(0.5) * (F.transpose() * Gb);
        const auto Sb = S(Eigen::all, cols);
        for (Index r = 0; r < residual.rows(); ++r)
            for (Index k = 0; k < m; ++k)
                residual(r, k) = sigmoid(residual(r, k)) - Scalar(Sb(r, k));
        grad.noalias() += Scalar(0.5) * F * residual;
    }
    if (terms & kQuantization) {
        const Matrix<Scalar> Bb = B.values()(Eigen::all, cols).template cast<Scalar>();
        grad += Scalar(2 * hyper.gamma) * (Gb - Bb);
    }
    if (terms & kBalance) {
        const Vector<Scalar> row_sum = G.rowwise().sum();
        grad.colwise() += Scalar(2 * hyper.eta) * row_sum;
    }
    return grad;
}

template <typename DF, typename DG>
Vector<typename DF::Scalar> grad_F(Index i, const Eigen::MatrixBase<DF>& F,
                                   const Eigen::MatrixBase<DG>& G, const CodeMatrix& B,
                                   const SimilarityMatrix& S, const Hyperparams& hyper,
                                   unsigned terms = kAllTerms) {
    const std::vector<Index> one{i};
    return grad_F_columns(one, F, G, B, S, hyper, terms).col(0);
}

template <typename DF, typename DG>
Vector<typename DF::Scalar> grad_G(Index j, const Eigen::MatrixBase<DF>& F,
                                   const Eigen::MatrixBase<DG>& G, const CodeMatrix& B,
                                   const SimilarityMatrix& S, const Hyperparams& hyper,
                                   unsigned terms = kAllTerms) {
    const std::vector<Index> one{j};
    return grad_G_columns(one, F, G, B, S, hyper, terms).col(0);
}

/// Closed-form discrete step: B = sign(gamma (F + G)), zero mapped to +1.
template <typename DF, typename DG>
CodeMatrix update_B(const Eigen::MatrixBase<DF>& F, const Eigen::MatrixBase<DG>& G,
                    const Hyperparams& hyper) {
    if (F.rows() != G.rows() || F.cols() != G.cols())
        throw std::invalid_argument("update_B: F and G must have the same shape");
    using Scalar = typename DF::Scalar;
    return sign_matrix(Scalar(hyper.gamma) * (F + G));
}

/// tr(B^T V).
template <typename DV>
typename DV::Scalar code_trace(const CodeMatrix& B, const Eigen::MatrixBase<DV>& V) {
    using Scalar = typename DV::Scalar;
    return B.values().template cast<Scalar>().cwiseProduct(V).sum();
}

}  // namespace dcmh
