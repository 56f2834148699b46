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

#include "covcast/spd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace covcast {

namespace {

// Smallest admissible eigenvalue relative to the largest one. Anything below
// is a rank-deficient matrix polluted by round-off.
constexpr double pd_relative_floor = 1e-13;

constexpr double hermitian_tolerance = 1e-12;

void check_square(const CMatrix &x, const char *what)
{
    if (x.rows() != x.cols() || x.rows() == 0)
        throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty");
}

void check_hermitian(const CMatrix &x, const char *what)
{
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    const double asym = (x - x.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= hermitian_tolerance * scale))
        throw std::domain_error(std::string(what) + ": matrix is not Hermitian (asymmetry " + std::to_string(asym) + ")");
}

void check_same_dim(const SpdMatrix &x, const SpdMatrix &y)
{
    if (x.dim() != y.dim())
        throw std::invalid_argument("dimension mismatch: " + std::to_string(x.dim()) + " vs " + std::to_string(y.dim()));
}

struct SqrtPair
{
    CMatrix sqrt;
    CMatrix inv_sqrt;
};

SqrtPair sqrt_pair(const SpdMatrix &x)
{
    const auto eig = hermitian_eigen(x.matrix());
    const Eigen::VectorXd s = eig.values.cwiseSqrt();
    return {reassemble(eig, s), reassemble(eig, s.cwiseInverse())};
}

CMatrix log_of_hermitian(const CMatrix &x)
{
    const auto eig = hermitian_eigen(x);
    if (eig.values(0) <= 0.0)
        throw std::domain_error("matrix_log: matrix is not positive definite");
    return reassemble(eig, eig.values.array().log().matrix());
}

CMatrix exp_of_hermitian(const CMatrix &x)
{
    const auto eig = hermitian_eigen(x);
    return reassemble(eig, eig.values.array().exp().matrix());
}

void check_weights(std::span<const SpdMatrix> points, std::span<const double> weights)
{
    if (points.empty())
        throw std::invalid_argument("barycenter: empty point list");
    if (points.size() != weights.size())
        throw std::invalid_argument("barycenter: points and weights differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        if (!(weights[i] >= 0.0))
            throw std::invalid_argument("barycenter: negative weight");
        if (points[i].dim() != points[0].dim())
            throw std::invalid_argument("barycenter: points differ in dimension");
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("barycenter: weights do not sum to one");
}

} // namespace

// ---- SpdMatrix / HermitianTangent --------------------------------------

SpdMatrix::SpdMatrix(const CMatrix &entries)
{
    check_square(entries, "SpdMatrix");
    if (!entries.allFinite())
        throw std::domain_error("SpdMatrix: non-finite entries");
    check_hermitian(entries, "SpdMatrix");
    entries_ = hermitian_part(entries);

    Eigen::SelfAdjointEigenSolver<CMatrix> solver(entries_, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::domain_error("SpdMatrix: eigendecomposition failed");
    const double lo = solver.eigenvalues()(0);
    const double hi = solver.eigenvalues()(entries_.rows() - 1);
    if (!(lo > 0.0) || lo <= pd_relative_floor * hi)
        throw std::domain_error("SpdMatrix: matrix is not positive definite (smallest eigenvalue " + std::to_string(lo) + ")");
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim)
{
    return SpdMatrix(CMatrix::Identity(dim, dim));
}

SpdMatrix SpdMatrix::diagonal(std::span<const double> values)
{
    CMatrix d = CMatrix::Zero(Eigen::Index(values.size()), Eigen::Index(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        d(Eigen::Index(i), Eigen::Index(i)) = values[i];
    return SpdMatrix(d);
}

HermitianTangent::HermitianTangent(const CMatrix &entries)
{
    check_square(entries, "HermitianTangent");
    check_hermitian(entries, "HermitianTangent");
    entries_ = hermitian_part(entries);
}

HermitianTangent HermitianTangent::zero(Eigen::Index dim)
{
    return HermitianTangent(CMatrix::Zero(dim, dim));
}

std::string to_string(Metric m)
{
    switch (m)
    {
    case Metric::Euclidean:
        return "euclidean";
    case Metric::LogEuclidean:
        return "log_euclidean";
    case Metric::AffineInvariant:
        return "affine_invariant";
    }
    return "unknown";
}

Metric metric_from_string(const std::string &name)
{
    for (Metric m : all_metrics)
        if (to_string(m) == name)
            return m;
    throw std::invalid_argument("unknown metric '" + name + "'");
}

// ---- Matrix functions --------------------------------------------------

CMatrix hermitian_part(const CMatrix &x)
{
    return (x + x.adjoint()) * 0.5;
}

HermitianEigen hermitian_eigen(const CMatrix &x)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(x));
    if (solver.info() != Eigen::Success)
        throw std::domain_error("hermitian_eigen: eigendecomposition failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix reassemble(const HermitianEigen &eig, const Eigen::VectorXd &mapped_values)
{
    return eig.vectors * mapped_values.asDiagonal() * eig.vectors.adjoint();
}

HermitianTangent matrix_log(const SpdMatrix &x)
{
    return HermitianTangent(log_of_hermitian(x.matrix()));
}

SpdMatrix matrix_exp(const HermitianTangent &v)
{
    return SpdMatrix(exp_of_hermitian(v.matrix()));
}

SpdMatrix matrix_sqrt(const SpdMatrix &x)
{
    return SpdMatrix(sqrt_pair(x).sqrt);
}

SpdMatrix matrix_inv_sqrt(const SpdMatrix &x)
{
    return SpdMatrix(sqrt_pair(x).inv_sqrt);
}

SpdMatrix inverse(const SpdMatrix &x)
{
    const auto eig = hermitian_eigen(x.matrix());
    return SpdMatrix(reassemble(eig, eig.values.cwiseInverse()));
}

// ---- Metrics -----------------------------------------------------------

double distance(Metric m, const SpdMatrix &x, const SpdMatrix &y)
{
    check_same_dim(x, y);
    switch (m)
    {
    case Metric::Euclidean:
        return (x.matrix() - y.matrix()).norm();
    case Metric::LogEuclidean:
        return (log_of_hermitian(x.matrix()) - log_of_hermitian(y.matrix())).norm();
    case Metric::AffineInvariant:
    {
        // Eigenvalues of L^{-1} X L^{-H} with Y = L L^H are those of
        // X^{1/2} Y^{-1} X^{1/2}.
        Eigen::LLT<CMatrix> llt(y.matrix());
        if (llt.info() != Eigen::Success)
            throw std::domain_error("distance: Cholesky factorization failed");
        CMatrix c = llt.matrixL().solve(x.matrix());
        c = llt.matrixL().solve(c.adjoint().eval());
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(c), Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success || solver.eigenvalues()(0) <= 0.0)
            throw std::domain_error("distance: generalized eigenvalues not positive");
        return solver.eigenvalues().array().log().matrix().norm();
    }
    }
    throw std::invalid_argument("distance: unknown metric");
}

SpdMatrix exp_map(Metric m, const SpdMatrix &x, const HermitianTangent &v)
{
    if (x.dim() != v.dim())
        throw std::invalid_argument("exp_map: dimension mismatch");
    switch (m)
    {
    case Metric::Euclidean:
        return SpdMatrix(x.matrix() + v.matrix());
    case Metric::LogEuclidean:
        return SpdMatrix(exp_of_hermitian(log_of_hermitian(x.matrix()) + v.matrix()));
    case Metric::AffineInvariant:
    {
        const auto xs = sqrt_pair(x);
        const CMatrix inner = exp_of_hermitian(xs.inv_sqrt * v.matrix() * xs.inv_sqrt);
        return SpdMatrix(xs.sqrt * inner * xs.sqrt);
    }
    }
    throw std::invalid_argument("exp_map: unknown metric");
}

HermitianTangent log_map(Metric m, const SpdMatrix &x, const SpdMatrix &y)
{
    check_same_dim(x, y);
    switch (m)
    {
    case Metric::Euclidean:
        return HermitianTangent(y.matrix() - x.matrix());
    case Metric::LogEuclidean:
        return HermitianTangent(log_of_hermitian(y.matrix()) - log_of_hermitian(x.matrix()));
    case Metric::AffineInvariant:
    {
        const auto xs = sqrt_pair(x);
        const CMatrix inner = log_of_hermitian(xs.inv_sqrt * y.matrix() * xs.inv_sqrt);
        return HermitianTangent(hermitian_part(xs.sqrt * inner * xs.sqrt));
    }
    }
    throw std::invalid_argument("log_map: unknown metric");
}

std::vector<double> distances_from(Metric m, const SpdMatrix &x, std::span<const SpdMatrix> ys)
{
    std::vector<double> out;
    out.reserve(ys.size());
    for (const auto &y : ys)
        check_same_dim(x, y);
    switch (m)
    {
    case Metric::Euclidean:
        for (const auto &y : ys)
            out.push_back((x.matrix() - y.matrix()).norm());
        break;
    case Metric::LogEuclidean:
    {
        const CMatrix log_x = log_of_hermitian(x.matrix());
        for (const auto &y : ys)
            out.push_back((log_x - log_of_hermitian(y.matrix())).norm());
        break;
    }
    case Metric::AffineInvariant:
    {
        Eigen::LLT<CMatrix> llt(x.matrix());
        if (llt.info() != Eigen::Success)
            throw std::domain_error("distances_from: Cholesky factorization failed");
        for (const auto &y : ys)
        {
            CMatrix c = llt.matrixL().solve(y.matrix());
            c = llt.matrixL().solve(c.adjoint().eval());
            Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(c), Eigen::EigenvaluesOnly);
            if (solver.info() != Eigen::Success || solver.eigenvalues()(0) <= 0.0)
                throw std::domain_error("distances_from: generalized eigenvalues not positive");
            out.push_back(solver.eigenvalues().array().log().matrix().norm());
        }
        break;
    }
    }
    return out;
}

std::vector<HermitianTangent> log_maps_from(Metric m, const SpdMatrix &x, std::span<const SpdMatrix> ys)
{
    std::vector<HermitianTangent> out;
    out.reserve(ys.size());
    for (const auto &y : ys)
        check_same_dim(x, y);
    switch (m)
    {
    case Metric::Euclidean:
        for (const auto &y : ys)
            out.emplace_back(CMatrix(y.matrix() - x.matrix()));
        break;
    case Metric::LogEuclidean:
    {
        const CMatrix log_x = log_of_hermitian(x.matrix());
        for (const auto &y : ys)
            out.emplace_back(CMatrix(log_of_hermitian(y.matrix()) - log_x));
        break;
    }
    case Metric::AffineInvariant:
    {
        const auto xs = sqrt_pair(x);
        for (const auto &y : ys)
        {
            const CMatrix inner = log_of_hermitian(xs.inv_sqrt * y.matrix() * xs.inv_sqrt);
            out.emplace_back(hermitian_part(xs.sqrt * inner * xs.sqrt));
        }
        break;
    }
    }
    return out;
}

// ---- Barycenter --------------------------------------------------------

namespace {

struct WhitenedStats
{
    CMatrix mean;     // sum_i w_i log(X^{-1/2} R_i X^{-1/2})
    double objective; // sum_i w_i d_AI(X, R_i)^2
};

WhitenedStats whitened_stats(const CMatrix &inv_sqrt, std::span<const SpdMatrix> points, std::span<const double> weights)
{
    const Eigen::Index n = points[0].dim();
    WhitenedStats out{CMatrix::Zero(n, n), 0.0};
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        if (weights[i] == 0.0)
            continue;
        const auto eig = hermitian_eigen(inv_sqrt * points[i].matrix() * inv_sqrt);
        if (eig.values(0) <= 0.0)
            throw std::domain_error("barycenter: whitened point is not positive definite");
        const Eigen::VectorXd logs = eig.values.array().log().matrix();
        out.mean += weights[i] * reassemble(eig, logs);
        out.objective += weights[i] * logs.squaredNorm();
    }
    out.mean = hermitian_part(out.mean);
    return out;
}

} // namespace

BarycenterResult barycenter(Metric m, std::span<const SpdMatrix> points, std::span<const double> weights,
                            const BarycenterOptions &options)
{
    check_weights(points, weights);
    const Eigen::Index n = points[0].dim();

    // Single-support shortcut: the minimizer of w d(R, Y)^2 is R itself.
    std::size_t support = 0, last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (weights[i] > 0.0)
            ++support, last = i;
    if (support == 1)
        return {points[last], true, 0, 0.0};

    if (m == Metric::Euclidean)
    {
        CMatrix sum = CMatrix::Zero(n, n);
        for (std::size_t i = 0; i < points.size(); ++i)
            if (weights[i] > 0.0)
                sum += weights[i] * points[i].matrix();
        return {SpdMatrix(sum), true, 0, 0.0};
    }

    CMatrix log_sum = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < points.size(); ++i)
        if (weights[i] > 0.0)
            log_sum += weights[i] * log_of_hermitian(points[i].matrix());
    SpdMatrix current(exp_of_hermitian(hermitian_part(log_sum)));
    if (m == Metric::LogEuclidean)
        return {current, true, 0, 0.0};

    // Karcher iteration X <- X^{1/2} exp(t T) X^{1/2} with T the whitened
    // tangent mean. t = 1 is tried first; a step that fails the Armijo test
    // on sum_i w_i d^2 is halved.
    constexpr double armijo = 1e-4;
    constexpr double min_step = 1e-10;

    auto xs = sqrt_pair(current);
    auto stats = whitened_stats(xs.inv_sqrt, points, weights);
    BarycenterResult result{current, false, 0, stats.mean.norm()};
    double step = 1.0;
    while (result.iterations < options.max_iterations)
    {
        if (result.residual < options.tolerance)
        {
            result.converged = true;
            break;
        }
        ++result.iterations;
        SpdMatrix trial(xs.sqrt * exp_of_hermitian(step * stats.mean) * xs.sqrt);
        auto trial_xs = sqrt_pair(trial);
        auto trial_stats = whitened_stats(trial_xs.inv_sqrt, points, weights);
        const double trial_residual = trial_stats.mean.norm();

        const double decrease = stats.objective - trial_stats.objective;
        const bool sufficient = decrease >= armijo * step * result.residual * result.residual;
        const bool at_roundoff = std::abs(decrease) <= 1e-12 * std::max(1.0, stats.objective) && trial_residual < result.residual;
        if (sufficient || at_roundoff)
        {
            current = std::move(trial);
            xs = std::move(trial_xs);
            stats = std::move(trial_stats);
            result.residual = trial_residual;
            step = std::min(1.0, 2.0 * step);
        }
        else if ((step *= 0.5) < min_step)
            break;
    }
    if (result.residual < options.tolerance)
        result.converged = true;
    result.value = current;
    return result;
}

double karcher_residual(const SpdMatrix &b, std::span<const SpdMatrix> points, std::span<const double> weights)
{
    check_weights(points, weights);
    return whitened_stats(sqrt_pair(b).inv_sqrt, points, weights).mean.norm();
}

} // namespace covcast
