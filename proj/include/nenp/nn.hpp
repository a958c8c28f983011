#pragma once

// Column-major building blocks for the encoder and span scorer. Every matrix stores one
// example (token or span) per column.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace nenp::nn {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <class Scalar>
struct LayerNormCache {
    Matrix<Scalar> normalized;
    RowVector<Scalar> inv_std;
};

/// Normalizes each column to zero mean and unit variance, then applies gain and bias.
template <class Derived, class Scalar = typename Derived::Scalar>
Matrix<Scalar> layer_norm(Eigen::MatrixBase<Derived> const& x, Vector<Scalar> const& gain,
                          Vector<Scalar> const& bias, Scalar eps, LayerNormCache<Scalar>& cache) {
    auto const rows = static_cast<Scalar>(x.rows());
    RowVector<Scalar> const mean = x.colwise().sum() / rows;
    Matrix<Scalar> centered = x.rowwise() - mean;
    RowVector<Scalar> const var = centered.array().square().colwise().sum() / rows;
    cache.inv_std = (var.array() + eps).rsqrt().matrix();
    cache.normalized = (centered.array().rowwise() * cache.inv_std.array()).matrix();
    return ((cache.normalized.array().colwise() * gain.array()).colwise() + bias.array()).matrix();
}

/// Accumulates parameter gradients and returns d loss / d x.
template <class Derived, class Scalar = typename Derived::Scalar>
Matrix<Scalar> layer_norm_backward(Eigen::MatrixBase<Derived> const& dy, Vector<Scalar> const& gain,
                                   LayerNormCache<Scalar> const& cache, Vector<Scalar>& dgain,
                                   Vector<Scalar>& dbias) {
    auto const rows = static_cast<Scalar>(dy.rows());
    dgain += (dy.array() * cache.normalized.array()).rowwise().sum().matrix();
    dbias += dy.rowwise().sum();
    Matrix<Scalar> const dnorm = (dy.array().colwise() * gain.array()).matrix();
    RowVector<Scalar> const sum_d = dnorm.colwise().sum();
    RowVector<Scalar> const sum_dx = (dnorm.array() * cache.normalized.array()).colwise().sum();
    Matrix<Scalar> dx = ((rows * dnorm.array()).rowwise() - sum_d.array()).matrix();
    dx -= (cache.normalized.array().rowwise() * sum_dx.array()).matrix();
    return (dx.array().rowwise() * (cache.inv_std.array() / rows)).matrix();
}

template <class Derived>
auto relu(Eigen::MatrixBase<Derived> const& x) {
    return x.cwiseMax(typename Derived::Scalar(0));
}

/// Zeroes dy where the forward ReLU input was non-positive.
template <class DerivedG, class DerivedX>
auto relu_backward(Eigen::MatrixBase<DerivedG> const& dy, Eigen::MatrixBase<DerivedX> const& pre) {
    using Scalar = typename DerivedG::Scalar;
    return (pre.array() > Scalar(0)).select(dy.array(), Scalar(0)).matrix();
}

/// Row-wise softmax (each row is one distribution).
template <class Derived, class Scalar = typename Derived::Scalar>
Matrix<Scalar> softmax_rows(Eigen::MatrixBase<Derived> const& logits) {
    Matrix<Scalar> out = logits.colwise() - logits.rowwise().maxCoeff();
    out = out.array().exp();
    out.array().colwise() /= out.rowwise().sum().array();
    return out;
}

/// Given probabilities p and d loss / d p, returns d loss / d logits, row-wise.
template <class DerivedP, class DerivedG, class Scalar = typename DerivedP::Scalar>
Matrix<Scalar> softmax_rows_backward(Eigen::MatrixBase<DerivedP> const& p,
                                     Eigen::MatrixBase<DerivedG> const& dp) {
    Vector<Scalar> const dot = (p.array() * dp.array()).rowwise().sum();
    return (p.array() * (dp.array().colwise() - dot.array())).matrix();
}

template <class Scalar>
Vector<Scalar> softmax(Vector<Scalar> const& logits) {
    Vector<Scalar> out = (logits.array() - logits.maxCoeff()).exp();
    return out / out.sum();
}

/// Inverted-dropout mask: entries are 0 with probability `rate`, else 1 / (1 - rate).
template <class Scalar, class Rng>
Matrix<Scalar> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
    Matrix<Scalar> mask(rows, cols);
    if (rate <= 0.0) {
        mask.setOnes();
        return mask;
    }
    std::bernoulli_distribution keep{1.0 - rate};
    Scalar const scale = Scalar(1) / Scalar(1.0 - rate);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = keep(rng) ? scale : Scalar(0);
    return mask;
}

} // namespace nenp::nn
