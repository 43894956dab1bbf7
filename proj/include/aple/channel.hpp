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
#include <cstdint>

#include "aple/geometry.hpp"

namespace aple {

inline constexpr double kSpeedOfLight = 299792458.0; ///< [m/s]

/// A single-source transmission scenario.
struct Scene {
    Eigen::Vector3d p_user = Eigen::Vector3d::Zero(); ///< source location [m]
    std::complex<double> beta{1.0, 0.0};  ///< common antenna gain
    std::complex<double> pilot{1.0, 0.0}; ///< transmitted symbol
    double noise_var = 0.0;               ///< per-entry complex noise variance
    std::uint64_t rng_seed = 0;
};

/// One received snapshot with per-subarray views.
struct Snapshot {
    Eigen::VectorXcd y;
    std::vector<Eigen::VectorXcd> slices; ///< y_m per PartitionPlan::index_map
};

/// Far-field signal model of one subarray: alpha * a(theta_x, theta_y).
struct SubarrayFarFieldModel {
    std::complex<double> alpha{0.0, 0.0};
    AoaPair aoa;
};

/// Exact spherical-wavefront LoS channel. Entry (i, j) is
/// beta * lambda / (4 pi r_ij) * exp(-j 2 pi r_ij / lambda) with
/// r_ij the antenna-to-source distance; flat order matches the geometry.
Eigen::VectorXcd near_field_channel(const ArrayGeometry& geometry, const Scene& scene);

/// y = h x + n with n circularly-symmetric complex Gaussian, i.i.d. variance
/// noise_var per entry, drawn from a generator seeded by scene.rng_seed.
/// Slices are materialized per plan.index_map.
Snapshot synthesize_snapshot(const Eigen::VectorXcd& h, const Scene& scene,
                             const PartitionPlan& plan);

/// Phase-only far-field response of a subarray. Entry at local (p, q) is
/// exp(j 2 pi (p d_x theta_x + q d_y theta_y) / lambda), flattened row-major
/// over (p, q); equals the Kronecker product of the two 1-D responses.
Eigen::VectorXcd steering_vector(const SubarrayLayout& layout, const AoaPair& aoa);

/// Predicted noiseless subarray signal alpha * a(aoa).
Eigen::VectorXcd predict_far_field(const SubarrayFarFieldModel& model,
                                   const SubarrayLayout& layout);

/// Noise variance realizing a given per-antenna average receive SNR:
/// sigma^2 = ||h x||^2 / (N_B 10^(snr_db/10)).
double snr_to_noise_var(const Eigen::VectorXcd& h, std::complex<double> pilot,
                        double snr_db);

} // namespace aple
