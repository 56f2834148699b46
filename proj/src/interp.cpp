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

#include "covcast/interp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace covcast {

// ---- Dictionary / WeightVector -----------------------------------------

Dictionary::Dictionary(std::vector<CovariancePair> pairs) : pairs_(std::move(pairs))
{
    if (pairs_.empty())
        throw std::invalid_argument("Dictionary: at least one pair required");
    const auto n_r = pairs_.front().uplink.dim();
    const auto n_t = pairs_.front().downlink.dim();
    uplinks_.reserve(pairs_.size());
    downlinks_.reserve(pairs_.size());
    for (const auto &p : pairs_)
    {
        if (p.uplink.dim() != n_r || p.downlink.dim() != n_t)
            throw std::invalid_argument("Dictionary: inconsistent matrix dimensions");
        uplinks_.push_back(p.uplink);
        downlinks_.push_back(p.downlink);
    }
}

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w))
{
    if (w_.empty())
        throw std::invalid_argument("WeightVector: empty");
    double total = 0.0;
    for (double x : w_)
    {
        if (!(x >= 0.0 && x <= 1.0))
            throw std::invalid_argument("WeightVector: weight outside [0, 1]");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("WeightVector: weights do not sum to one");
}

WeightVector WeightVector::one_hot(std::size_t size, std::size_t index)
{
    std::vector<double> w(size, 0.0);
    w.at(index) = 1.0;
    return WeightVector(std::move(w));
}

WeightVector WeightVector::uniform(std::size_t size)
{
    return WeightVector(std::vector<double>(size, 1.0 / double(size)));
}

std::vector<std::size_t> WeightVector::support() const
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < w_.size(); ++i)
        if (w_[i] > 0.0)
            idx.push_back(i);
    return idx;
}

std::string Scheme::label() const
{
    switch (kind)
    {
    case SchemeKind::NearestNeighbor:
        return "nearest";
    case SchemeKind::Mirror:
        return "mirror";
    case SchemeKind::Kernel:
        if (bandwidth)
        {
            std::ostringstream os;
            os.precision(17);
            os << "kernel(" << *bandwidth << ")";
            return os.str();
        }
        return "kernel";
    }
    return "unknown";
}

Scheme scheme_from_string(const std::string &text)
{
    if (text == "nearest")
        return {SchemeKind::NearestNeighbor, std::nullopt};
    if (text == "mirror")
        return {SchemeKind::Mirror, std::nullopt};
    if (text == "kernel")
        return {SchemeKind::Kernel, std::nullopt};
    if (text.starts_with("kernel(") && text.ends_with(")"))
    {
        const std::string inner = text.substr(7, text.size() - 8);
        std::size_t used = 0;
        double sigma = 0.0;
        try
        {
            sigma = std::stod(inner, &used);
        }
        catch (const std::exception &)
        {
            used = 0;
        }
        if (used != inner.size() || !(sigma > 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("invalid kernel bandwidth in '" + text + "'");
        return {SchemeKind::Kernel, sigma};
    }
    throw std::invalid_argument("unknown scheme '" + text + "'");
}

// ---- Weights -----------------------------------------------------------

std::vector<double> uplink_distances(const Dictionary &dict, const SpdMatrix &q, Metric m)
{
    if (q.dim() != dict.uplink_dim())
        throw std::invalid_argument("query dimension does not match dictionary uplink dimension");
    return distances_from(m, q, dict.uplinks());
}

WeightVector nearest_neighbor_weights(const Dictionary &dict, const SpdMatrix &q, Metric m)
{
    const auto d = uplink_distances(dict, q, m);
    const auto best = std::size_t(std::min_element(d.begin(), d.end()) - d.begin());
    return WeightVector::one_hot(d.size(), best);
}

std::vector<std::size_t> closest_indices(std::span<const double> distances, std::size_t k)
{
    std::vector<std::size_t> idx(distances.size());
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + std::ptrdiff_t(k), idx.end(), [&](std::size_t a, std::size_t b) {
        return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
    });
    idx.resize(k);
    return idx;
}

Eigen::MatrixXd tangent_gram(std::span<const HermitianTangent> tangents)
{
    if (tangents.empty())
        return {};
    const Eigen::Index n = tangents.front().dim();
    CMatrix stacked(n * n, Eigen::Index(tangents.size()));
    for (std::size_t k = 0; k < tangents.size(); ++k)
        stacked.col(Eigen::Index(k)) = tangents[k].matrix().reshaped();
    return (stacked.adjoint() * stacked).real();
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd &v)
{
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j)
    {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / double(j + 1);
        if (u[j] - t > 0.0)
            theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

WeightVector solve_simplex_qp(const Eigen::MatrixXd &gram)
{
    if (gram.rows() != gram.cols() || gram.rows() == 0)
        throw std::invalid_argument("solve_simplex_qp: Gram matrix must be square and non-empty");
    const Eigen::Index k = gram.rows();
    const Eigen::MatrixXd g = (gram + gram.transpose()) * 0.5;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g, Eigen::EigenvaluesOnly);
    const double lambda_max = solver.eigenvalues()(k - 1);
    if (solver.eigenvalues()(0) < -1e-10 * std::max(1.0, lambda_max))
        throw std::invalid_argument("solve_simplex_qp: Gram matrix is not positive semidefinite");
    if (k == 1 || lambda_max <= 0.0)
        return WeightVector::uniform(std::size_t(k));

    constexpr int max_iterations = 10000;
    constexpr double movement_tolerance = 1e-12;

    Eigen::VectorXd x = Eigen::VectorXd::Constant(k, 1.0 / double(k));
    Eigen::VectorXd y = x;
    double t = 1.0;
    for (int it = 0; it < max_iterations; ++it)
    {
        const Eigen::VectorXd x_next = project_to_simplex(y - (g * y) / lambda_max);
        const Eigen::VectorXd delta = x_next - x;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        // Adaptive restart when momentum points uphill.
        if ((y - x_next).dot(delta) > 0.0)
        {
            t = 1.0;
            y = x_next;
        }
        else
        {
            y = x_next + ((t - 1.0) / t_next) * delta;
            t = t_next;
        }
        x = x_next;
        if (delta.norm() < movement_tolerance)
            break;
    }

    std::vector<double> w(x.data(), x.data() + k);
    double total = 0.0;
    for (double &v : w)
        total += (v = std::max(v, 0.0));
    for (double &v : w)
        v = std::min(v / total, 1.0);
    return WeightVector(std::move(w));
}

WeightVector solve_simplex_qp(const CMatrix &gram)
{
    if (gram.rows() != gram.cols())
        throw std::invalid_argument("solve_simplex_qp: Gram matrix must be square");
    const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
    if ((gram - gram.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("solve_simplex_qp: Gram matrix is not Hermitian");
    return solve_simplex_qp(Eigen::MatrixXd(gram.real()));
}

WeightVector mirror_weights(const Dictionary &dict, const SpdMatrix &q, Metric m)
{
    const auto d = uplink_distances(dict, q, m);
    const auto n_r = std::size_t(dict.uplink_dim());
    const auto selected = closest_indices(d, std::min(n_r * n_r, dict.size()));

    std::vector<SpdMatrix> nearest;
    nearest.reserve(selected.size());
    for (auto i : selected)
        nearest.push_back(dict[i].uplink);
    const auto local = solve_simplex_qp(tangent_gram(log_maps_from(m, q, nearest)));

    std::vector<double> w(dict.size(), 0.0);
    for (std::size_t k = 0; k < selected.size(); ++k)
        w[selected[k]] = local[k];
    return WeightVector(std::move(w));
}

KernelWeights kernel_weights(std::span<const double> distances, double sigma)
{
    if (!(sigma > 0.0))
        throw std::invalid_argument("kernel_weights: bandwidth must be positive");
    if (distances.empty())
        throw std::invalid_argument("kernel_weights: empty dictionary");

    // Shift by the smallest distance so the nearest entry has unit weight.
    const double d_min = *std::min_element(distances.begin(), distances.end());
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    KernelWeights out{WeightVector::uniform(distances.size()), std::exp(-d_min * d_min * inv_two_var) == 0.0};

    std::vector<double> w(distances.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        total += (w[i] = std::exp(-(distances[i] - d_min) * (distances[i] + d_min) * inv_two_var));
    for (double &v : w)
        v = std::min(v / total, 1.0);
    out.weights = WeightVector(std::move(w));
    return out;
}

KernelWeights kernel_weights(const Dictionary &dict, const SpdMatrix &q, Metric m, double sigma)
{
    return kernel_weights(uplink_distances(dict, q, m), sigma);
}

// ---- Bandwidth ---------------------------------------------------------

double bandwidth_objective(std::span<const double> distances, const Eigen::MatrixXd &gram, double sigma)
{
    const auto kw = kernel_weights(distances, sigma);
    const Eigen::Map<const Eigen::VectorXd> w(kw.weights.values().data(), Eigen::Index(kw.weights.size()));
    return std::sqrt(std::max(0.0, w.dot(gram * w)));
}

std::pair<double, double> bandwidth_bracket(std::span<const double> distances)
{
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double d : distances)
    {
        if (d > 0.0)
            lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return {lo / 10.0, 10.0 * hi};
}

BandwidthResult select_bandwidth(std::span<const double> unordered_distances, const Eigen::MatrixXd &unordered_gram)
{
    if (unordered_distances.empty())
        throw std::invalid_argument("select_bandwidth: empty dictionary");
    if (unordered_gram.rows() != Eigen::Index(unordered_distances.size()) || unordered_gram.cols() != unordered_gram.rows())
        throw std::invalid_argument("select_bandwidth: Gram matrix does not match distances");

    // Evaluate in distance order so the selected bandwidth does not depend on
    // the order of the dictionary entries (the argmin is only resolved to
    // about sqrt(eps), so summation order would otherwise leak through).
    const auto order = closest_indices(unordered_distances, unordered_distances.size());
    std::vector<double> distances(order.size());
    Eigen::MatrixXd gram(unordered_gram.rows(), unordered_gram.cols());
    for (std::size_t a = 0; a < order.size(); ++a)
    {
        distances[a] = unordered_distances[order[a]];
        for (std::size_t b = 0; b < order.size(); ++b)
            gram(Eigen::Index(a), Eigen::Index(b)) = unordered_gram(Eigen::Index(order[a]), Eigen::Index(order[b]));
    }

    const auto objective = [&](double log_sigma) { return bandwidth_objective(distances, gram, std::exp(log_sigma)); };

    const auto [lo_sigma, hi_sigma] = bandwidth_bracket(distances);
    if (hi_sigma <= 0.0)
        return {1.0, objective(0.0), true};

    // 200 evaluations: a uniform scan in log sigma locates the basin, then
    // golden-section refines inside the two grid cells around the best node.
    constexpr int scan_points = 160;
    constexpr int golden_evaluations = 40;

    const double a0 = std::log(lo_sigma), b0 = std::log(hi_sigma);
    std::vector<double> grid(scan_points), values(scan_points);
    for (int i = 0; i < scan_points; ++i)
    {
        grid[i] = a0 + (b0 - a0) * double(i) / double(scan_points - 1);
        values[i] = objective(grid[i]);
    }
    const auto best = std::size_t(std::min_element(values.begin(), values.end()) - values.begin());
    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    if (*max_it - *min_it <= 1e-12 * std::max(1.0, *max_it))
    {
        const double mid = 0.5 * (a0 + b0);
        return {std::exp(mid), objective(mid), true};
    }

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = grid[best == 0 ? 0 : best - 1];
    double b = grid[std::min<std::size_t>(best + 1, scan_points - 1)];
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = objective(c), fd = objective(d);
    for (int i = 2; i < golden_evaluations; ++i)
    {
        if (fc <= fd)
        {
            b = d, d = c, fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        }
        else
        {
            a = c, c = d, fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }

    BandwidthResult out{std::exp(grid[best]), values[best], false};
    if (fc < out.objective)
        out = {std::exp(c), fc, false};
    if (fd < out.objective)
        out = {std::exp(d), fd, false};
    return out;
}

BandwidthResult select_bandwidth(const Dictionary &dict, const SpdMatrix &q, Metric m)
{
    const auto d = uplink_distances(dict, q, m);
    return select_bandwidth(d, tangent_gram(log_maps_from(m, q, dict.uplinks())));
}

// ---- Estimator ---------------------------------------------------------

Estimate estimate_downlink(const Dictionary &dict, const SpdMatrix &q, const Scheme &s, Metric m)
{
    std::vector<std::string> flags;
    auto weights = [&]() -> WeightVector {
        switch (s.kind)
        {
        case SchemeKind::NearestNeighbor:
            return nearest_neighbor_weights(dict, q, m);
        case SchemeKind::Mirror:
            return mirror_weights(dict, q, m);
        case SchemeKind::Kernel:
        {
            const auto d = uplink_distances(dict, q, m);
            double sigma = 0.0;
            if (s.bandwidth)
                sigma = *s.bandwidth;
            else
            {
                const auto bw = select_bandwidth(d, tangent_gram(log_maps_from(m, q, dict.uplinks())));
                if (bw.degenerate)
                    flags.emplace_back("degenerate-bandwidth");
                sigma = bw.sigma;
            }
            auto kw = kernel_weights(d, sigma);
            if (kw.underflow)
                flags.emplace_back("kernel-underflow");
            return std::move(kw.weights);
        }
        }
        throw std::invalid_argument("estimate_downlink: unknown scheme");
    }();

    auto bary = barycenter(m, dict.downlinks(), weights.values());
    if (!bary.converged)
        flags.emplace_back("karcher-nonconverged");
    return {std::move(bary.value), std::move(weights), std::move(flags)};
}

} // namespace covcast
