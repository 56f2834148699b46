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

#include "covcast/channel_model.hpp"
#include "covcast/spd.hpp"

#include <string>
#include <vector>

namespace covcast {

enum class BaselineKind
{
    NoConversion,
    Spline,
    PerfectFeedback
};

std::string to_string(BaselineKind kind);
BaselineKind baseline_from_string(const std::string &name);

class UnsupportedGeometry : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

SpdMatrix no_conversion(const SpdMatrix &r_ul, Eigen::Index downlink_dim);

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
class NaturalCubicSpline
{
public:
    NaturalCubicSpline(std::vector<double> x, std::vector<double> y);

    /// Evaluates inside [x_0, x_{n-1}]; throws std::domain_error outside.
    [[nodiscard]] double operator()(double t) const;

private:
    std::vector<double> x_, y_, second_;
};

/// Covariance function at integer lags: c(m) = mean of the m-th
/// superdiagonal, m = 0..N-1.
std::vector<cplx> toeplitz_lags(const CMatrix &r);

/// Hermitian Toeplitz matrix with first row `first_row` (entry (i, j), j >= i,
/// equals first_row[j - i]).
CMatrix hermitian_toeplitz(const std::vector<cplx> &first_row);

struct SplineConversion
{
    SpdMatrix value;
    CMatrix unrepaired;  // Toeplitz matrix before PD repair
    bool clipped = false;
};

/// Frequency-dilation baseline for uniform linear arrays: resamples the
/// Toeplitz-averaged uplink covariance function at lags m f_dl / f_ul with
/// natural cubic splines on the real and imaginary parts.
SplineConversion spline_convert(const SpdMatrix &r_ul, const ArrayGeometry &geometry, double f_ul, double f_dl);

SpdMatrix perfect_feedback(const SpdMatrix &r_dl_true, std::size_t n_realizations, Rng &rng);

struct Projection
{
    SpdMatrix value;
    bool clipped = false;
    double floor = 0.0;
};

/// Clips eigenvalues of the Hermitian part of h below
/// 1e-10 * max(trace(h) / N, 1).
Projection psd_projection(const CMatrix &h);

} // namespace covcast
