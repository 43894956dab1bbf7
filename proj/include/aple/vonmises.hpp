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

#pragma once

namespace aple {

/// Von Mises message over a direction cosine theta in [-1, 1]. The density
/// lives on the wrapped variable pi*theta:
///
///   M(pi theta; mu, kappa) = exp(kappa cos(pi theta - mu)) / (2 pi I0(kappa))
///
/// kappa = 0 encodes the uniform (uninformative) message; its mu is
/// normalized to 0. All angles are radians of the wrapped variable, kept in
/// (-pi, pi]. The pi-factor conversions between theta and the wrapped angle
/// are centralized in this module.
struct VonMisesMsg {
    double mu = 0.0;
    double kappa = 0.0;

    static VonMisesMsg uniform() { return {}; }
};

enum class VmSign { product, quotient };

/// Wraps an angle to (-pi, pi].
double wrap_angle(double x);

/// log I0(kappa), numerically stable for any kappa >= 0 (asymptotic
/// expansion beyond kappa ~ 50).
double log_bessel_i0(double kappa);

/// Log density kappa cos(pi theta - mu) - log(2 pi I0(kappa)).
double vm_log_density(const VonMisesMsg& msg, double theta);

/// Product (or quotient) of two von Mises messages via natural-parameter
/// arithmetic: kappa_e e^{j mu_e} = kappa_a e^{j mu_a} +/- kappa_b e^{j mu_b}.
/// A quotient whose resultant kappa falls below a small floor is clamped,
/// with mu carried from the dominant operand.
VonMisesMsg vm_combine(const VonMisesMsg& a, const VonMisesMsg& b, VmSign sign);

/// Von Mises message matching a locally Gaussian log density at its mode:
/// mu = pi * mode_theta, kappa = neg_curvature / pi^2, where neg_curvature is
/// the negated second derivative of the log density with respect to theta.
VonMisesMsg vm_from_laplace(double mode_theta, double neg_curvature);

} // namespace aple
