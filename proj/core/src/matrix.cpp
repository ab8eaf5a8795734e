#include "hamball/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "hamball/error.hpp"

namespace hamball {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw UsageError("Matrix: data size does not match shape");
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw UsageError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) shape_error("matmul", a, b);
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto brow = b.row(k);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
    Matrix c(a.cols(), b.cols());
    for (std::size_t n = 0; n < a.rows(); ++n) {
        const auto arow = a.row(n);
        const auto brow = b.row(n);
        for (std::size_t i = 0; i < arow.size(); ++i) {
            const double ai = arow[i];
            if (ai == 0.0) continue;
            auto out = c.row(i);
            for (std::size_t j = 0; j < brow.size(); ++j) out[j] += ai * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto brow = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < arow.size(); ++k) s += arow[k] * brow[k];
            c(i, j) = s;
        }
    }
    return c;
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= src.rows()) throw UsageError("gather_rows: row index out of range");
        std::copy_n(src.row(rows[i]).begin(), src.cols(), out.row(i).begin());
    }
    return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols() && !a.empty() && !b.empty()) shape_error("vstack", a, b);
    const std::size_t cols = a.empty() ? b.cols() : a.cols();
    std::vector<double> data = a.data();
    data.insert(data.end(), b.data().begin(), b.data().end());
    return Matrix(a.rows() + b.rows(), cols, std::move(data));
}

}  // namespace hamball
