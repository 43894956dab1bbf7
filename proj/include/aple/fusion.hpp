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

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "aple/geometry.hpp"
#include "aple/vonmises.hpp"

namespace aple {

/// One angular factor of the location belief: a von Mises message over the
/// direction cosine seen from `center` along `axis`.
struct VmFactor {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d axis = Eigen::Vector3d::UnitX(); ///< unit vector e_l
    double mu = 0.0;
    double kappa = 0.0;
};

/// Gaussian approximation of the location belief.
struct GaussianBelief3D {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
    bool well_conditioned = true; ///< false when any curvature eigenvalue was floored
};

/// Geometry of the belief-to-angle feedback: u_bar points from the belief
/// mean to the subarray center, v is the unit vector perpendicular to u_bar
/// within span{u_bar, axis}, theta_bar is the direction cosine at the mean.
struct FeedbackGeometry {
    Eigen::Vector3d u_bar = Eigen::Vector3d::Zero();
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    double theta_bar = 0.0;
    bool degenerate = false; ///< u_bar parallel to axis, or |theta_bar| ~ 1
};

struct BeliefEval {
    double value = 0.0;
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
};

struct AscentConfig {
    double grad_tol = 1e-9;
    int max_iter = 500;
    double divergence_radius_scale = 100.0; ///< in units of the problem scale
};

struct AscentResult {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    bool converged = false;
    int iterations = 0;
};

inline constexpr std::size_t kNoExclusion = std::numeric_limits<std::size_t>::max();

/// Log belief h(p) = sum_k kappa_k cos(pi theta_k(p) - mu_k) with
/// theta_k(p) = (p - center_k)^T axis_k / ||p - center_k||, and its analytic
/// gradient. The factor at `exclude` is skipped (the leave-one-out belief).
BeliefEval location_log_belief(const Eigen::Vector3d& p, std::span<const VmFactor> factors,
                               std::size_t exclude = kNoExclusion);

/// Analytic 3x3 Hessian of the log belief.
Eigen::Matrix3d location_belief_hessian(const Eigen::Vector3d& p,
                                        std::span<const VmFactor> factors,
                                        std::size_t exclude = kNoExclusion);

/// Local maximizer of the log belief by curvature-preconditioned ascent with
/// backtracking line search. Stops at the gradient tolerance, on a numerical
/// stall at the optimum, or after max_iter steps; flight beyond the
/// divergence radius is reported as non-convergence.
AscentResult map_location(std::span<const VmFactor> factors, const Eigen::Vector3d& init,
                          const AscentConfig& config = {},
                          std::size_t exclude = kNoExclusion);

/// Gaussian belief at a local maximum: covariance is the inverse of the
/// negated Hessian with eigenvalues floored at eig_floor. Flooring is
/// reported through well_conditioned = false.
GaussianBelief3D belief_covariance(const Eigen::Vector3d& p_hat,
                                   std::span<const VmFactor> factors,
                                   std::size_t exclude = kNoExclusion,
                                   double eig_floor = 1e-8);

/// Feedback geometry of a belief towards one subarray/axis pair.
FeedbackGeometry feedback_geometry(const Eigen::Vector3d& belief_mean,
                                   const Eigen::Vector3d& center,
                                   const Eigen::Vector3d& axis);

/// Von Mises feedback message from the Gaussian location belief to the
/// direction cosine seen from `center` along `axis`:
///   mu    = pi theta_bar
///   kappa = ||u_bar||^2 / (pi^2 (1 - theta_bar^2) v^T C v), capped.
/// Degenerate geometry returns the kappa-capped message.
VonMisesMsg feedback_message(const GaussianBelief3D& belief, const Eigen::Vector3d& center,
                             const Eigen::Vector3d& axis, double kappa_cap = 1e10);

/// Convenience overload for axis index 0 (x) or 1 (y).
VonMisesMsg feedback_message(const GaussianBelief3D& belief, const Eigen::Vector3d& center,
                             int axis, double kappa_cap = 1e10);

} // namespace aple
