#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dcmh {

// Dense storage is row-major throughout. Feature and output matrices keep
// one column per data point.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using DenseMatrix = Matrix<double>;
using DenseVector = Vector<double>;
using Index = Eigen::Index;

/// Raised when a computation produces or is handed a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an object's internal state does not match what an
/// operation expects (e.g. a forward trace produced by another network).
class InvalidState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed input file. Carries the location of the first problem: a line
/// number for text sections, a byte offset for binary sections.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::int64_t line, std::int64_t offset)
        : std::runtime_error(what + " (line " + std::to_string(line) + ", offset " +
                             std::to_string(offset) + ")"),
          line_(line), offset_(offset) {}

    std::int64_t line() const { return line_; }
    std::int64_t offset() const { return offset_; }

private:
    std::int64_t line_;
    std::int64_t offset_;
};

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite value");
}

/// Checked matrix product.
template <typename A, typename B>
auto matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b)
    -> Matrix<typename A::Scalar> {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    Matrix<typename A::Scalar> out = a * b;
    require_finite(out, "matmul");
    return out;
}

/// Logistic function, evaluated without overflow for any finite x.
template <typename Scalar>
Scalar sigmoid(Scalar x) {
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

/// log(1 + e^x) as max(x, 0) + log1p(e^{-|x|}).
template <typename Scalar>
Scalar softplus(Scalar x) {
    return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

// ---------------------------------------------------------------------------
// Binary codes

using CodeEntry = std::int8_t;
using CodeStorage = Matrix<CodeEntry>;
using CodeVector = Vector<CodeEntry>;

/// c x n matrix whose entries are exactly -1 or +1. Column j is the code of
/// point j.
class CodeMatrix {
public:
    CodeMatrix() = default;
    CodeMatrix(Index rows, Index cols) : values_(CodeStorage::Ones(rows, cols)) {}

    /// Validates that every entry is -1 or +1.
    explicit CodeMatrix(CodeStorage values) : values_(std::move(values)) {
        if (!((values_.array() == 1) || (values_.array() == -1)).all())
            throw std::invalid_argument("CodeMatrix: entries must be -1 or +1");
    }

    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }
    CodeEntry operator()(Index r, Index c) const { return values_(r, c); }
    auto col(Index j) const { return values_.col(j); }
    const CodeStorage& values() const { return values_; }

    /// Entries as doubles, for use in real-valued expressions.
    DenseMatrix real() const { return values_.cast<double>(); }

    void set(Index r, Index c, bool positive) { values_(r, c) = positive ? 1 : -1; }

    friend bool operator==(const CodeMatrix& a, const CodeMatrix& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && a.values_ == b.values_;
    }

private:
    CodeStorage values_;
};

/// Element-wise sign with zero (and -0) mapped to +1.
template <typename Derived>
CodeMatrix sign_matrix(const Eigen::MatrixBase<Derived>& m) {
    CodeStorage out(m.rows(), m.cols());
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) out(r, c) = m(r, c) >= 0 ? 1 : -1;
    return CodeMatrix(std::move(out));
}

template <typename Derived>
CodeVector sign_vector(const Eigen::MatrixBase<Derived>& v) {
    return v.unaryExpr([](auto x) -> CodeEntry { return x >= 0 ? 1 : -1; });
}

}  // namespace dcmh
