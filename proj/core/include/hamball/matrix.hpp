#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hamball {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double v);
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// a (n x k) * b (k x m)
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T (k x n)^T * b (n x m) -> k x m
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a (n x m) * b^T (k x m)^T -> n x k
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Rows of `src` selected by `rows`, in order.
Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows);
// Rows of a followed by rows of b.
Matrix vstack(const Matrix& a, const Matrix& b);

}  // namespace hamball
