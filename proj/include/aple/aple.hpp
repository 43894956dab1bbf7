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

#include <cstdint>
#include <utility>
#include <vector>

#include "aple/aoa_estimation.hpp"
#include "aple/channel.hpp"
#include "aple/fusion.hpp"
#include "aple/geometry.hpp"

namespace aple {

/// Coarse initializer for the first location ascent: an angular grid of
/// direction cosines crossed with log-spaced ranges. Zero range bounds mean
/// "derive from the array field boundaries" (R_N/2 to 2 R_F).
struct InitGridSpec {
    int n_dir = 20;   ///< grid points per direction-cosine axis
    int n_range = 20; ///< log-spaced range points
    double r_min = 0.0;
    double r_max = 0.0;
};

struct ApleConfig {
    int n1 = 5;            ///< outer iterations
    double damping = 0.5;  ///< feedback damping on natural parameters, in [0, 1)
    double early_exit_tol = 1e-6; ///< stop when the estimate moves less [m]
    AoaEstimatorConfig aoa;       ///< newton_cap plays the inner iteration count
    AscentConfig ascent;
    InitGridSpec init_grid;
    double hessian_floor = 1e-8; ///< curvature eigenvalue floor [1/m^2]
    double kappa_cap = 1e10;     ///< feedback message concentration cap
};

struct LocationEstimate {
    Eigen::Vector3d p_hat = Eigen::Vector3d::Zero();
    GaussianBelief3D belief; ///< over the full product of all 2M factors
    std::vector<AoaPosterior> per_subarray;
    int iterations_run = 0;
    bool converged = false;
    double final_gradient_norm = 0.0; ///< of the full log belief at p_hat
};

/// Runs the full message-passing location estimator on one snapshot:
/// alternates per-subarray AoA posterior estimation with location belief
/// fusion and geometric feedback, for up to n1 outer iterations.
/// noise_var is the known per-entry noise variance sigma^2.
LocationEstimate run_aple(const Snapshot& snapshot, const PartitionPlan& plan,
                          const ArrayGeometry& geometry, double noise_var,
                          const ApleConfig& config = {});

struct ComplexityProbeConfig {
    std::vector<std::pair<int, int>> sizes; ///< (n_x, m_x); square arrays and partitions
    double d_over_lambda = 0.25;
    double freq_hz = 28e9;
    double range = 2.0;  ///< source distance [m]
    double snr_db = 20.0;
    int repeats = 5;     ///< median over this many runs per size
    std::uint64_t seed = 1;
    ApleConfig aple;
};

struct ComplexityRow {
    int n_b = 0;
    double seconds = 0.0;
};

/// Median wall time of run_aple per array size; snapshot synthesis excluded.
std::vector<ComplexityRow> complexity_probe(const ComplexityProbeConfig& config);

/// Least-squares slope of log T versus log N_B.
double loglog_slope(const std::vector<ComplexityRow>& rows);

} // namespace aple
