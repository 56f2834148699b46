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

#include "covcast/random.hpp"
#include "covcast/spd.hpp"

#include <string>
#include <vector>

namespace covcast {

inline constexpr double speed_of_light = 299792458.0;

struct Point2
{
    double x = 0.0;
    double y = 0.0;
};

inline double dist(Point2 a, Point2 b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

enum class ArrayKind
{
    ULA,
    RandomSquare
};

std::string to_string(ArrayKind kind);
ArrayKind array_kind_from_string(const std::string &name);

/// Planar antenna positions (meters). Positions must be pairwise more than
/// 1e-6 m apart.
class ArrayGeometry
{
public:
    ArrayGeometry(std::vector<Point2> positions, ArrayKind kind);

    [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }
    [[nodiscard]] const std::vector<Point2> &positions() const noexcept { return positions_; }
    [[nodiscard]] ArrayKind kind() const noexcept { return kind_; }

    /// Centroid of the antenna positions; UE distances are measured from here.
    [[nodiscard]] Point2 reference_point() const;

private:
    std::vector<Point2> positions_;
    ArrayKind kind_;
};

struct ScattererField
{
    ScattererField(Point2 ue_position, double radius, std::vector<Point2> scatterers, double distance);

    Point2 ue_position;
    double radius;
    std::vector<Point2> scatterers;
    double distance; // UE to array reference point
};

struct PropagationParams
{
    PropagationParams(double wavelength, double power, double noise_power);

    static PropagationParams at_frequency(double frequency_hz, double power, double noise_power)
    {
        return {speed_of_light / frequency_hz, power, noise_power};
    }

    double wavelength;
    double power;
    double noise_power;
};

ArrayGeometry make_ula(std::size_t n, double spacing);

/// i.i.d. uniform positions on [0, side]^2; the whole set is redrawn if any
/// two antennas are within 1e-6 m.
ArrayGeometry make_random_square(std::size_t n, double side, Rng &rng);

/// Uniform distance in [d_min, d_max] and uniform bearing around `reference`.
Point2 place_ue(Rng &rng, double d_min, double d_max, Point2 reference = {});

/// n_s points area-uniform on the disk of radius r about `center`. The field's
/// distance is measured from `reference`.
ScattererField draw_scatterers(Rng &rng, Point2 center, double r, std::size_t n_s, Point2 reference = {});

/// Ring-model covariance
///   R_ij = P / (D^2 N_S) sum_l exp(2 pi i (d_li - d_lj) / lambda) + P_N delta_ij
/// with d_li the distance from scatterer l to antenna i.
SpdMatrix model_covariance(const ArrayGeometry &g, const ScattererField &s, const PropagationParams &p);

/// Columns are realizations h_l = R^{1/2} w_l with w_l ~ CN(0, I).
CMatrix channel_realizations(const SpdMatrix &r, std::size_t n_realizations, Rng &rng);

/// (1/L) sum_l h_l h_l^H over the columns of `realizations`.
SpdMatrix sample_covariance(const CMatrix &realizations);

} // namespace covcast
