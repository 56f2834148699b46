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

#include "covcast/channel_model.hpp"

#include <cmath>
#include <numbers>

namespace covcast {

namespace {

constexpr double min_antenna_separation = 1e-6;

bool well_separated(const std::vector<Point2> &pts)
{
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (dist(pts[i], pts[j]) <= min_antenna_separation)
                return false;
    return true;
}

} // namespace

std::string to_string(ArrayKind kind)
{
    return kind == ArrayKind::ULA ? "ULA" : "RandomSquare";
}

ArrayKind array_kind_from_string(const std::string &name)
{
    if (name == "ULA")
        return ArrayKind::ULA;
    if (name == "RandomSquare")
        return ArrayKind::RandomSquare;
    throw std::invalid_argument("unknown array kind '" + name + "' (expected ULA or RandomSquare)");
}

ArrayGeometry::ArrayGeometry(std::vector<Point2> positions, ArrayKind kind) : positions_(std::move(positions)), kind_(kind)
{
    if (positions_.empty())
        throw std::invalid_argument("ArrayGeometry: at least one antenna required");
    if (!well_separated(positions_))
        throw std::invalid_argument("ArrayGeometry: antenna positions must be distinct");
}

Point2 ArrayGeometry::reference_point() const
{
    Point2 c;
    for (const auto &p : positions_)
        c.x += p.x, c.y += p.y;
    c.x /= double(positions_.size());
    c.y /= double(positions_.size());
    return c;
}

ScattererField::ScattererField(Point2 ue, double r, std::vector<Point2> pts, double d)
    : ue_position(ue), radius(r), scatterers(std::move(pts)), distance(d)
{
    if (scatterers.empty())
        throw std::invalid_argument("ScattererField: at least one scatterer required");
    if (!(distance > 0.0))
        throw std::invalid_argument("ScattererField: UE distance must be positive");
    if (!(radius >= 0.0))
        throw std::invalid_argument("ScattererField: radius must be nonnegative");
    for (const auto &p : scatterers)
        if (dist(p, ue_position) > radius * (1.0 + 1e-12))
            throw std::invalid_argument("ScattererField: scatterer outside radius");
}

PropagationParams::PropagationParams(double lambda, double p, double p_n) : wavelength(lambda), power(p), noise_power(p_n)
{
    if (!(wavelength > 0.0) || !(power > 0.0) || !(noise_power >= 0.0))
        throw std::invalid_argument("PropagationParams: require wavelength > 0, P > 0, P_N >= 0");
}

ArrayGeometry make_ula(std::size_t n, double spacing)
{
    if (n == 0 || !(spacing > 0.0))
        throw std::invalid_argument("make_ula: require N >= 1 and spacing > 0");
    std::vector<Point2> pts(n);
    for (std::size_t i = 0; i < n; ++i)
        pts[i] = {double(i) * spacing, 0.0};
    return {std::move(pts), ArrayKind::ULA};
}

ArrayGeometry make_random_square(std::size_t n, double side, Rng &rng)
{
    if (n == 0 || !(side > 0.0))
        throw std::invalid_argument("make_random_square: require N >= 1 and side > 0");
    std::vector<Point2> pts(n);
    do
    {
        for (auto &p : pts)
        {
            p.x = rng.uniform(0.0, side);
            p.y = rng.uniform(0.0, side);
        }
    } while (!well_separated(pts));
    return {std::move(pts), ArrayKind::RandomSquare};
}

Point2 place_ue(Rng &rng, double d_min, double d_max, Point2 reference)
{
    if (!(d_min > 0.0) || d_max < d_min)
        throw std::invalid_argument("place_ue: require 0 < D_min <= D_max");
    const double d = rng.uniform(d_min, d_max);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return {reference.x + d * std::cos(angle), reference.y + d * std::sin(angle)};
}

ScattererField draw_scatterers(Rng &rng, Point2 center, double r, std::size_t n_s, Point2 reference)
{
    if (!(r > 0.0) || n_s == 0)
        throw std::invalid_argument("draw_scatterers: require r > 0 and N_S >= 1");
    std::vector<Point2> pts(n_s);
    for (auto &p : pts)
    {
        const double rho = r * std::sqrt(rng.uniform());
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        p = {center.x + rho * std::cos(angle), center.y + rho * std::sin(angle)};
    }
    return {center, r, std::move(pts), dist(center, reference)};
}

SpdMatrix model_covariance(const ArrayGeometry &g, const ScattererField &s, const PropagationParams &p)
{
    const auto n = Eigen::Index(g.size());
    const auto n_s = Eigen::Index(s.scatterers.size());
    const double wavenumber = 2.0 * std::numbers::pi / p.wavelength;

    // Path lengths, then pairwise phase differences per scatterer.
    Eigen::MatrixXd lengths(n, n_s);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < n_s; ++l)
            lengths(i, l) = dist(s.scatterers[std::size_t(l)], g.positions()[std::size_t(i)]);

    const double scale = p.power / (s.distance * s.distance * double(n_s));
    CMatrix r(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        r(i, i) = scale * double(n_s) + p.noise_power;
        for (Eigen::Index j = i + 1; j < n; ++j)
        {
            const Eigen::ArrayXd phase = wavenumber * (lengths.row(i) - lengths.row(j)).array();
            const cplx entry(scale * phase.cos().sum(), scale * phase.sin().sum());
            r(i, j) = entry;
            r(j, i) = std::conj(entry);
        }
    }
    return SpdMatrix(r);
}

CMatrix channel_realizations(const SpdMatrix &r, std::size_t n_realizations, Rng &rng)
{
    if (n_realizations == 0)
        throw std::invalid_argument("channel_realizations: require L >= 1");
    const auto n = r.dim();
    CMatrix w(n, Eigen::Index(n_realizations));
    for (Eigen::Index l = 0; l < w.cols(); ++l)
        for (Eigen::Index i = 0; i < n; ++i)
            w(i, l) = rng.complex_normal();
    return matrix_sqrt(r).matrix() * w;
}

SpdMatrix sample_covariance(const CMatrix &realizations)
{
    if (realizations.cols() == 0 || realizations.rows() == 0)
        throw std::invalid_argument("sample_covariance: no realizations");
    const CMatrix scm = (realizations * realizations.adjoint()) / double(realizations.cols());
    return SpdMatrix(hermitian_part(scm));
}

} // namespace covcast
