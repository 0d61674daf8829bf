#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace posterlab {

// Dense row-major tensor of doubles. Copies are shallow (shared storage);
// use clone() for a deep copy. Rank is 1 or 2 almost everywhere; rasters and
// conv activations use flattened 2-D views with explicit geometry passed
// alongside.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols);
    explicit Tensor(std::vector<int> shape);

    static Tensor zeros(int rows, int cols);
    static Tensor full(int rows, int cols, double value);
    static Tensor randn(int rows, int cols, std::mt19937_64& rng, double stddev = 1.0);
    static Tensor from_vector(const std::vector<double>& v);  // 1 x n

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int64_t size() const { return static_cast<int64_t>(rows_) * cols_; }
    bool empty() const { return size() == 0; }

    double* data() { return data_->data(); }
    const double* data() const { return data_->data(); }

    double& at(int r, int c) { return (*data_)[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return (*data_)[static_cast<size_t>(r) * cols_ + c]; }
    double& operator[](int64_t i) { return (*data_)[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }

    Tensor clone() const;
    Tensor reshaped(int rows, int cols) const;  // shares storage
    void fill(double value);
    void zero() { fill(0.0); }

    // In-place y += alpha * x (shape must match).
    void axpy(double alpha, const Tensor& x);

    double sum() const;
    double abs_max() const;
    double sq_norm() const;

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::shared_ptr<std::vector<double>> data_;
};

// out = a @ b, with optional transposes; shapes checked.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
// acc += a @ b (accumulating variant used by backward passes).
void matmul_acc(Tensor& acc, const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

// Random square orthogonal matrix (QR of a seeded Gaussian).
Tensor random_orthogonal(int n, std::mt19937_64& rng);

}  // namespace posterlab
