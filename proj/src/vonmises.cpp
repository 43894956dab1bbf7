// SPDX-License-Identifier: Apache-2.0
//
// aple — scalable near-field localization with partitioned planar arrays
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

#include "aple/vonmises.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace aple {

namespace {
constexpr double kQuotientKappaFloor = 1e-8;
constexpr double kAsymptoticSwitch = 50.0;
} // namespace

double wrap_angle(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(x, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

double log_bessel_i0(double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("log_bessel_i0: kappa must be >= 0");
    if (kappa < kAsymptoticSwitch) return std::log(std::cyl_bessel_i(0.0, kappa));
    // I0(k) ~ e^k / sqrt(2 pi k) * (1 + 1/(8k) + 9/(128 k^2) + 225/(3072 k^3))
    const double inv = 1.0 / kappa;
    const double series = 1.0 + inv * (0.125 + inv * (0.0703125 + inv * 0.0732421875));
    return kappa - 0.5 * std::log(2.0 * std::numbers::pi * kappa) + std::log(series);
}

double vm_log_density(const VonMisesMsg& msg, double theta) {
    return msg.kappa * std::cos(std::numbers::pi * theta - msg.mu) -
           std::log(2.0 * std::numbers::pi) - log_bessel_i0(msg.kappa);
}

VonMisesMsg vm_combine(const VonMisesMsg& a, const VonMisesMsg& b, VmSign sign) {
    const std::complex<double> za = std::polar(a.kappa, a.mu);
    const std::complex<double> zb = std::polar(b.kappa, b.mu);
    const std::complex<double> z = (sign == VmSign::product) ? za + zb : za - zb;
    VonMisesMsg out;
    out.kappa = std::abs(z);
    if (sign == VmSign::quotient && out.kappa < kQuotientKappaFloor) {
        // Near-total cancellation: keep a faint message pointing along the
        // dominant operand so downstream mode finding stays defined.
        out.kappa = kQuotientKappaFloor;
        out.mu = (a.kappa >= b.kappa) ? a.mu : b.mu;
        return out;
    }
    out.mu = (out.kappa > 0.0) ? wrap_angle(std::arg(z)) : 0.0;
    return out;
}

VonMisesMsg vm_from_laplace(double mode_theta, double neg_curvature) {
    if (!(neg_curvature > 0.0))
        throw std::invalid_argument("vm_from_laplace: curvature must be positive");
    VonMisesMsg out;
    out.mu = wrap_angle(std::numbers::pi * mode_theta);
    out.kappa = neg_curvature / (std::numbers::pi * std::numbers::pi);
    return out;
}

} // namespace aple
