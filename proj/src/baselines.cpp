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

#include "covcast/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace covcast {

std::string to_string(BaselineKind kind)
{
    switch (kind)
    {
    case BaselineKind::NoConversion:
        return "no_conversion";
    case BaselineKind::Spline:
        return "spline";
    case BaselineKind::PerfectFeedback:
        return "perfect_feedback";
    }
    return "unknown";
}

BaselineKind baseline_from_string(const std::string &name)
{
    for (auto k : {BaselineKind::NoConversion, BaselineKind::Spline, BaselineKind::PerfectFeedback})
        if (to_string(k) == name)
            return k;
    throw std::invalid_argument("unknown baseline '" + name + "'");
}

SpdMatrix no_conversion(const SpdMatrix &r_ul, Eigen::Index downlink_dim)
{
    if (r_ul.dim() != downlink_dim)
        throw std::invalid_argument("no_conversion: uplink and downlink dimensions differ");
    return r_ul;
}

// ---- Natural cubic spline ----------------------------------------------

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)), second_(x_.size(), 0.0)
{
    const std::size_t n = x_.size();
    if (n == 0 || y_.size() != n)
        throw std::invalid_argument("NaturalCubicSpline: need matching non-empty knots");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("NaturalCubicSpline: knots must be strictly increasing");
    if (n < 3)
        return;

    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    const std::size_t m = n - 2;
    std::vector<double> diag(m), upper(m), rhs(m);
    for (std::size_t k = 0; k < m; ++k)
    {
        const std::size_t i = k + 1;
        const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        diag[k] = 2.0 * (h0 + h1);
        upper[k] = h1;
        rhs[k] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t k = 1; k < m; ++k)
    {
        const double lower = x_[k + 1] - x_[k];
        const double f = lower / diag[k - 1];
        diag[k] -= f * upper[k - 1];
        rhs[k] -= f * rhs[k - 1];
    }
    for (std::size_t k = m; k-- > 0;)
    {
        double v = rhs[k];
        if (k + 1 < m)
            v -= upper[k] * second_[k + 2];
        second_[k + 1] = v / diag[k];
    }
}

double NaturalCubicSpline::operator()(double t) const
{
    const double span = x_.back() - x_.front();
    const double slack = 1e-12 * std::max(1.0, span);
    if (t < x_.front() - slack || t > x_.back() + slack)
        throw std::domain_error("NaturalCubicSpline: evaluation outside the knot range");
    if (x_.size() == 1)
        return y_.front();
    t = std::clamp(t, x_.front(), x_.back());

    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = std::size_t(std::max<std::ptrdiff_t>(1, it - x_.begin())) - 1;
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
}

// ---- Spline dilation baseline ------------------------------------------

std::vector<cplx> toeplitz_lags(const CMatrix &r)
{
    const Eigen::Index n = r.rows();
    std::vector<cplx> c(static_cast<std::size_t>(n));
    for (Eigen::Index m = 0; m < n; ++m)
    {
        cplx sum = 0.0;
        for (Eigen::Index i = 0; i + m < n; ++i)
            sum += r(i, i + m);
        c[std::size_t(m)] = sum / double(n - m);
    }
    return c;
}

CMatrix hermitian_toeplitz(const std::vector<cplx> &first_row)
{
    const auto n = Eigen::Index(first_row.size());
    CMatrix t(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        t(i, i) = first_row[0].real();
        for (Eigen::Index j = i + 1; j < n; ++j)
        {
            t(i, j) = first_row[std::size_t(j - i)];
            t(j, i) = std::conj(first_row[std::size_t(j - i)]);
        }
    }
    return t;
}

SplineConversion spline_convert(const SpdMatrix &r_ul, const ArrayGeometry &geometry, double f_ul, double f_dl)
{
    if (geometry.kind() != ArrayKind::ULA)
        throw UnsupportedGeometry("spline_convert: requires a uniform linear array");
    if (Eigen::Index(geometry.size()) != r_ul.dim())
        throw std::invalid_argument("spline_convert: geometry size does not match covariance dimension");
    if (!(f_ul > 0.0) || !(f_dl > 0.0))
        throw std::invalid_argument("spline_convert: frequencies must be positive");
    if (f_dl > f_ul)
        throw std::domain_error("spline_convert: f_dl > f_ul would extrapolate beyond the sampled lags");

    const auto lags = toeplitz_lags(r_ul.matrix());
    const std::size_t n = lags.size();
    std::vector<double> x(n), re(n), im(n);
    for (std::size_t m = 0; m < n; ++m)
        x[m] = double(m), re[m] = lags[m].real(), im[m] = lags[m].imag();
    const NaturalCubicSpline spline_re(x, re), spline_im(x, im);

    const double factor = f_dl / f_ul;
    std::vector<cplx> row(n);
    for (std::size_t m = 0; m < n; ++m)
        row[m] = {spline_re(double(m) * factor), spline_im(double(m) * factor)};
    row[0] = row[0].real();

    CMatrix toeplitz = hermitian_toeplitz(row);
    auto repaired = psd_projection(toeplitz);
    return {std::move(repaired.value), std::move(toeplitz), repaired.clipped};
}

SpdMatrix perfect_feedback(const SpdMatrix &r_dl_true, std::size_t n_realizations, Rng &rng)
{
    if (Eigen::Index(n_realizations) < r_dl_true.dim())
        throw std::invalid_argument("perfect_feedback: require L >= N");
    return sample_covariance(channel_realizations(r_dl_true, n_realizations, rng));
}

Projection psd_projection(const CMatrix &h)
{
    if (h.rows() != h.cols() || h.rows() == 0)
        throw std::invalid_argument("psd_projection: matrix must be square and non-empty");
    const auto eig = hermitian_eigen(h);
    const double n = double(h.rows());
    const double floor = 1e-10 * std::max(h.real().trace() / n, 1.0);
    if (eig.values(0) >= floor)
        return {SpdMatrix(h), false, floor};
    const Eigen::VectorXd clipped = eig.values.cwiseMax(floor);
    return {SpdMatrix(reassemble(eig, clipped)), true, floor};
}

} // namespace covcast
