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

#include <complex>

#include "aple/channel.hpp"
#include "aple/geometry.hpp"
#include "aple/vonmises.hpp"

namespace aple {

/// Single-tone Bayesian AoA estimator configuration. The Newton cap bounds
/// the inner refinement of the two direction cosines.
struct AoaEstimatorConfig {
    double gain_prior_scale = 1e6; ///< gain prior variance, in units of mean |y|^2
    int newton_cap = 50;
    double grad_tol = 1e-10; ///< gradient tolerance, scaled by local curvature
    int pad_factor = 4;      ///< periodogram zero-padding (grid >= pad * N per axis)
};

/// Per-subarray posterior of the two direction cosines, the fitted complex
/// gain, and the residual noise-plus-mismatch variance.
struct AoaPosterior {
    VonMisesMsg post_x;
    VonMisesMsg post_y;
    std::complex<double> alpha_hat{0.0, 0.0};
    double residual_var = 0.0;
    AoaPair mode;                   ///< joint log-posterior maximizer
    bool newton_converged = false;
    bool used_grid_fallback = false; ///< curvature taken by finite differences
};

/// Estimates the von Mises posteriors of (theta_x, theta_y) from one
/// subarray snapshot y_m under von Mises priors.
///
/// The log posterior over the direction cosines, with the complex gain
/// ridge-concentrated out, is
///
///   L(tx, ty) = |a(tx,ty)^H y|^2 / (sigma_m^2 (N_m + sigma_m^2/sigma_alpha^2))
///             + log prior_x(tx) + log prior_y(ty)  (+ const)
///
/// maximized by a prior-weighted zero-padded FFT periodogram followed by a
/// joint 2-D Newton refinement, then converted to per-axis von Mises
/// messages by Laplace approximation on the diagonal of the negated Hessian.
///
/// sigma2 is the known per-entry noise variance. The subarray noise
/// sigma_m^2 generally exceeds it because of far-field model mismatch; it is
/// re-estimated internally from the fit residual (floored at sigma2) and the
/// posterior is re-weighted accordingly.
AoaPosterior estimate_posterior(const Eigen::VectorXcd& y_m,
                                const VonMisesMsg& prior_x,
                                const VonMisesMsg& prior_y,
                                const SubarrayLayout& layout, double sigma2,
                                const AoaEstimatorConfig& config = {});

/// Log-posterior surface probe at one (theta_x, theta_y), with analytic
/// gradient and Hessian, weighted at the given noise variance.
struct AoaObjectiveEval {
    double value = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

AoaObjectiveEval evaluate_aoa_log_posterior(const Eigen::VectorXcd& y_m,
                                            const VonMisesMsg& prior_x,
                                            const VonMisesMsg& prior_y,
                                            const SubarrayLayout& layout, double sigma2,
                                            double theta_x, double theta_y,
                                            const AoaEstimatorConfig& config = {});

/// Extrinsic message: posterior divided by the incoming prior.
VonMisesMsg extrinsic_message(const VonMisesMsg& posterior, const VonMisesMsg& prior);

/// max(sigma2, ||y_m - alpha_hat a(mode)||^2 / N_m).
double estimate_residual_var(const Eigen::VectorXcd& y_m, const AoaPosterior& fit,
                             const SubarrayLayout& layout, double sigma2);

} // namespace aple
