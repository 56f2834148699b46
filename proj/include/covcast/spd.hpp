// SPDX-License-Identifier: Apache-2.0
//
// covcast: downlink covariance estimation from uplink covariance dictionaries
// Copyright (C) 2026 The covcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace covcast {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Hermitian positive-definite matrix. Construction validates the Hermitian
/// property (absolute tolerance 1e-12, scaled by the largest entry when that
/// exceeds one) and strict positive definiteness, then stores the exactly
/// symmetrized value (X + X^H) / 2.
class SpdMatrix
{
public:
    explicit SpdMatrix(const CMatrix &entries);

    static SpdMatrix identity(Eigen::Index dim);
    static SpdMatrix diagonal(std::span<const double> values);

    [[nodiscard]] const CMatrix &matrix() const noexcept { return entries_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return entries_.rows(); }
    [[nodiscard]] cplx operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

private:
    CMatrix entries_;
};

/// Hermitian matrix of unrestricted signature (a tangent vector).
class HermitianTangent
{
public:
    explicit HermitianTangent(const CMatrix &entries);

    static HermitianTangent zero(Eigen::Index dim);

    [[nodiscard]] const CMatrix &matrix() const noexcept { return entries_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return entries_.rows(); }
    [[nodiscard]] double norm() const { return entries_.norm(); }

private:
    CMatrix entries_;
};

enum class Metric
{
    Euclidean,
    LogEuclidean,
    AffineInvariant
};

std::string to_string(Metric m);
Metric metric_from_string(const std::string &name);

/// The three metrics, in declaration order.
inline constexpr Metric all_metrics[] = {Metric::Euclidean, Metric::LogEuclidean, Metric::AffineInvariant};

// Hermitian symmetrization (X + X^H) / 2.
CMatrix hermitian_part(const CMatrix &x);

// Eigendecomposition of the Hermitian part of x; eigenvalues ascending.
struct HermitianEigen
{
    Eigen::VectorXd values;
    CMatrix vectors;
};
HermitianEigen hermitian_eigen(const CMatrix &x);

// U f(diag) U^H from an eigendecomposition.
CMatrix reassemble(const HermitianEigen &eig, const Eigen::VectorXd &mapped_values);

HermitianTangent matrix_log(const SpdMatrix &x);
SpdMatrix matrix_exp(const HermitianTangent &v);
SpdMatrix matrix_sqrt(const SpdMatrix &x);
SpdMatrix matrix_inv_sqrt(const SpdMatrix &x);
SpdMatrix inverse(const SpdMatrix &x);

double distance(Metric m, const SpdMatrix &x, const SpdMatrix &y);
SpdMatrix exp_map(Metric m, const SpdMatrix &x, const HermitianTangent &v);
HermitianTangent log_map(Metric m, const SpdMatrix &x, const SpdMatrix &y);

/// distance(m, x, y) for every y, sharing the factorization of x.
std::vector<double> distances_from(Metric m, const SpdMatrix &x, std::span<const SpdMatrix> ys);

/// log_map(m, x, y) for every y, sharing the factorization of x.
std::vector<HermitianTangent> log_maps_from(Metric m, const SpdMatrix &x, std::span<const SpdMatrix> ys);

struct BarycenterOptions
{
    double tolerance = 1e-10; // Frobenius norm of the whitened tangent mean
    int max_iterations = 200;
};

struct BarycenterResult
{
    SpdMatrix value;
    bool converged = true;
    int iterations = 0;
    double residual = 0.0;
};

/// Weighted barycenter (Frechet mean) of SPD matrices. Euclidean and
/// log-Euclidean use the closed forms; affine-invariant runs the Karcher
/// fixed-point iteration from the log-Euclidean mean. Points with zero weight
/// are skipped.
BarycenterResult barycenter(Metric m, std::span<const SpdMatrix> points, std::span<const double> weights,
                            const BarycenterOptions &options = {});

/// Frobenius norm of sum_i w_i log(B^{-1/2} R_i B^{-1/2}): the first-order
/// optimality residual of an affine-invariant barycenter B.
double karcher_residual(const SpdMatrix &b, std::span<const SpdMatrix> points, std::span<const double> weights);

} // namespace covcast
