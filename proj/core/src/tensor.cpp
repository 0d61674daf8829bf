#include "posterlab/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "posterlab/common.hpp"

namespace posterlab {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

Tensor::Tensor(int rows, int cols)
    : rows_(rows), cols_(cols), data_(std::make_shared<std::vector<double>>(static_cast<size_t>(rows) * cols, 0.0)) {
    require(rows >= 0 && cols >= 0, ErrorKind::InvalidInput, "tensor dims must be non-negative");
}

Tensor::Tensor(std::vector<int> shape) : Tensor(shape.at(0), shape.at(1)) {}

Tensor Tensor::zeros(int rows, int cols) { return Tensor(rows, cols); }

Tensor Tensor::full(int rows, int cols, double value) {
    Tensor t(rows, cols);
    t.fill(value);
    return t;
}

Tensor Tensor::randn(int rows, int cols, std::mt19937_64& rng, double stddev) {
    Tensor t(rows, cols);
    std::normal_distribution<double> dist(0.0, stddev);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

Tensor Tensor::from_vector(const std::vector<double>& v) {
    Tensor t(1, static_cast<int>(v.size()));
    std::copy(v.begin(), v.end(), t.data());
    return t;
}

Tensor Tensor::clone() const {
    Tensor t(rows_, cols_);
    if (data_) std::copy(data_->begin(), data_->end(), t.data());
    return t;
}

Tensor Tensor::reshaped(int rows, int cols) const {
    require(static_cast<int64_t>(rows) * cols == size(), ErrorKind::InvalidInput, "reshape must preserve size");
    Tensor t = *this;
    t.rows_ = rows;
    t.cols_ = cols;
    return t;
}

void Tensor::fill(double value) { std::fill(data_->begin(), data_->end(), value); }

void Tensor::axpy(double alpha, const Tensor& x) {
    require(same_shape(x), ErrorKind::InvalidInput, "axpy shape mismatch");
    double* d = data();
    const double* s = x.data();
    for (int64_t i = 0; i < size(); ++i) d[i] += alpha * s[i];
}

double Tensor::sum() const {
    double s = 0.0;
    for (int64_t i = 0; i < size(); ++i) s += (*data_)[static_cast<size_t>(i)];
    return s;
}

double Tensor::abs_max() const {
    double m = 0.0;
    for (int64_t i = 0; i < size(); ++i) m = std::max(m, std::abs((*data_)[static_cast<size_t>(i)]));
    return m;
}

double Tensor::sq_norm() const {
    double s = 0.0;
    for (int64_t i = 0; i < size(); ++i) {
        double v = (*data_)[static_cast<size_t>(i)];
        s += v * v;
    }
    return s;
}

bool Tensor::all_finite() const {
    for (int64_t i = 0; i < size(); ++i) {
        if (!std::isfinite((*data_)[static_cast<size_t>(i)])) return false;
    }
    return true;
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    int m = trans_a ? a.cols() : a.rows();
    int k = trans_a ? a.rows() : a.cols();
    int kb = trans_b ? b.cols() : b.rows();
    int n = trans_b ? b.rows() : b.cols();
    require(k == kb, ErrorKind::InvalidInput, "matmul inner dim mismatch");
    Tensor out(m, n);
    matmul_acc(out, a, b, trans_a, trans_b);
    return out;
}

void matmul_acc(Tensor& acc, const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    ECMap ma(a.data(), a.rows(), a.cols());
    ECMap mb(b.data(), b.rows(), b.cols());
    EMap mo(acc.data(), acc.rows(), acc.cols());
    if (!trans_a && !trans_b)
        mo.noalias() += ma * mb;
    else if (trans_a && !trans_b)
        mo.noalias() += ma.transpose() * mb;
    else if (!trans_a && trans_b)
        mo.noalias() += ma * mb.transpose();
    else
        mo.noalias() += ma.transpose() * mb.transpose();
}

Tensor random_orthogonal(int n, std::mt19937_64& rng) {
    Tensor g = Tensor::randn(n, n, rng);
    ECMap mg(g.data(), n, n);
    Eigen::HouseholderQR<EMat> qr(mg);
    EMat q = qr.householderQ() * EMat::Identity(n, n);
    // Fix signs so the factorization is unique given the input.
    EMat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    }
    Tensor out(n, n);
    EMap(out.data(), n, n) = q;
    return out;
}

}  // namespace posterlab
