#pragma once

#include "rumin/rational.hpp"

#include <cstddef>
#include <vector>

namespace rumin::linalg {

/// Small dense matrix over the rationals, row-major.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    Matrix transpose() const;
    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend Matrix operator-(const Matrix& a, const Matrix& b);
    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Rational> data_;
};

struct RowEchelon {
    Matrix reduced;
    std::vector<std::size_t> pivots;
};

RowEchelon rref(Matrix m);
std::size_t rank(const Matrix& m);
/// Basis of the null space, one vector per free column.
std::vector<std::vector<Rational>> nullspace(const Matrix& m);
/// Inverse of a square nonsingular matrix; throws otherwise.
Matrix inverse(const Matrix& m);
/// Moore-Penrose pseudo-inverse via a full-rank factorization.
Matrix pseudo_inverse(const Matrix& m);

}  // namespace rumin::linalg
