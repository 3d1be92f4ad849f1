#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace cfd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kRowSumTolerance = 1e-6;

/// n x C matrix of class probabilities, one row per public sample.
/// Construction validates that every row is a probability distribution.
class SoftLabelMatrix {
public:
    SoftLabelMatrix() = default;
    explicit SoftLabelMatrix(Matrix values, double tolerance = kRowSumTolerance);

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t classes() const { return static_cast<std::size_t>(values_.cols()); }
    const Matrix& values() const { return values_; }
    double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }

    friend bool operator==(const SoftLabelMatrix& a, const SoftLabelMatrix& b) {
        return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
               a.values_ == b.values_;
    }

private:
    Matrix values_;
};

/// Throws ValidationError unless every row is nonnegative and sums to 1.
void require_row_stochastic(const Matrix& m, double tolerance = kRowSumTolerance);

Matrix one_hot(const std::vector<int>& labels, int num_classes);

/// Index of the largest entry in each row (first one on ties).
std::vector<int> row_argmax(const Matrix& m);

}  // namespace cfd
