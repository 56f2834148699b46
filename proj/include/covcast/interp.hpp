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

#include "covcast/spd.hpp"

#include <optional>
#include <string>
#include <vector>

namespace covcast {

struct CovariancePair
{
    SpdMatrix uplink;
    SpdMatrix downlink;
};

/// Ordered uplink/downlink covariance pairs collected during training.
class Dictionary
{
public:
    explicit Dictionary(std::vector<CovariancePair> pairs);

    [[nodiscard]] std::size_t size() const noexcept { return pairs_.size(); }
    [[nodiscard]] Eigen::Index uplink_dim() const { return pairs_.front().uplink.dim(); }
    [[nodiscard]] Eigen::Index downlink_dim() const { return pairs_.front().downlink.dim(); }
    [[nodiscard]] const CovariancePair &operator[](std::size_t i) const { return pairs_[i]; }
    [[nodiscard]] const std::vector<CovariancePair> &pairs() const noexcept { return pairs_; }
    [[nodiscard]] const std::vector<SpdMatrix> &uplinks() const noexcept { return uplinks_; }
    [[nodiscard]] const std::vector<SpdMatrix> &downlinks() const noexcept { return downlinks_; }

private:
    std::vector<CovariancePair> pairs_;
    std::vector<SpdMatrix> uplinks_;
    std::vector<SpdMatrix> downlinks_;
};

/// Nonnegative weights summing to one (tolerance 1e-9).
class WeightVector
{
public:
    explicit WeightVector(std::vector<double> w);

    static WeightVector one_hot(std::size_t size, std::size_t index);
    static WeightVector uniform(std::size_t size);

    [[nodiscard]] std::size_t size() const noexcept { return w_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return w_[i]; }
    [[nodiscard]] const std::vector<double> &values() const noexcept { return w_; }
    [[nodiscard]] std::vector<std::size_t> support() const;

private:
    std::vector<double> w_;
};

enum class SchemeKind
{
    NearestNeighbor,
    Mirror,
    Kernel
};

struct Scheme
{
    SchemeKind kind = SchemeKind::NearestNeighbor;
    std::optional<double> bandwidth; // Kernel only; empty selects it per query

    [[nodiscard]] std::string label() const;
};

/// Parses "nearest", "mirror", "kernel" or "kernel(<sigma>)".
Scheme scheme_from_string(const std::string &text);

/// Distances d(R_i^UL, q) for every dictionary entry.
std::vector<double> uplink_distances(const Dictionary &dict, const SpdMatrix &q, Metric m);

WeightVector nearest_neighbor_weights(const Dictionary &dict, const SpdMatrix &q, Metric m);

/// Minimizes w^T G w over the probability simplex by accelerated projected
/// gradient (step 1 / lambda_max(G), at most 10000 iterations, stops when the
/// iterate moves less than 1e-12). Only the real part of G is used.
WeightVector solve_simplex_qp(const CMatrix &gram);
WeightVector solve_simplex_qp(const Eigen::MatrixXd &gram);

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd &v);

/// Indices of the k entries closest to q (ties by lower index).
std::vector<std::size_t> closest_indices(std::span<const double> distances, std::size_t k);

/// Real Gram matrix G_ij = <V_i, V_j>_F of Hermitian tangent vectors.
Eigen::MatrixXd tangent_gram(std::span<const HermitianTangent> tangents);

WeightVector mirror_weights(const Dictionary &dict, const SpdMatrix &q, Metric m);

struct KernelWeights
{
    WeightVector weights;
    bool underflow = false; // every raw kernel value was zero: nearest-neighbor fallback
};

/// Gaussian kernel weights exp(-d_i^2 / 2 sigma^2), normalized.
KernelWeights kernel_weights(std::span<const double> distances, double sigma);
KernelWeights kernel_weights(const Dictionary &dict, const SpdMatrix &q, Metric m, double sigma);

struct BandwidthResult
{
    double sigma = 1.0;
    double objective = 0.0;
    bool degenerate = false;
};

/// Bandwidth objective || sum_k w_k(sigma) V_k ||_F evaluated through the
/// Gram matrix of the tangent vectors V_k.
double bandwidth_objective(std::span<const double> distances, const Eigen::MatrixXd &gram, double sigma);

/// Search bracket [d_min / 10, 10 d_max] over the nonzero distances.
std::pair<double, double> bandwidth_bracket(std::span<const double> distances);

BandwidthResult select_bandwidth(std::span<const double> distances, const Eigen::MatrixXd &gram);
BandwidthResult select_bandwidth(const Dictionary &dict, const SpdMatrix &q, Metric m);

struct Estimate
{
    SpdMatrix value;
    WeightVector weights;
    std::vector<std::string> flags;
};

Estimate estimate_downlink(const Dictionary &dict, const SpdMatrix &q, const Scheme &s, Metric m);

} // namespace covcast
