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

#include <Eigen/Dense>
#include <vector>

namespace aple {

/// Uniform planar array in the z = 0 plane, centered at the origin.
///
/// Antennas are indexed by (i, j) with i running over the x-axis and j over
/// the y-axis. The index sets are symmetric around zero: for an odd count N
/// they are the integers {-(N-1)/2, ..., (N-1)/2}; for an even count the same
/// formula yields half-integer steps, which keeps the array centered. The
/// flat storage order is row-major over (i, j).
struct ArrayGeometry {
    int n_x = 0;
    int n_y = 0;
    double d_x = 0.0;    ///< antenna spacing along x [m]
    double d_y = 0.0;    ///< antenna spacing along y [m]
    double lambda = 0.0; ///< carrier wavelength [m]
    std::vector<Eigen::Vector3d> positions; ///< row-major over (i, j)

    int count() const { return n_x * n_y; }

    /// Symmetric axis index of the k-th element along an axis with n elements.
    static double axis_index(int k, int n) { return k - 0.5 * (n - 1); }

    int flat_index(int kx, int ky) const { return kx * n_y + ky; }
};

/// Near/far-field boundaries of an aperture.
struct FieldBoundaries {
    double fresnel = 0.0;    ///< R_N = 0.62 sqrt(D^3 / lambda) [m]
    double fraunhofer = 0.0; ///< R_F = 2 D^2 / lambda [m]
    double aperture = 0.0;   ///< D = sqrt(L_x^2 + L_y^2) [m]
};

/// Per-subarray element layout: counts, spacings and wavelength. All
/// subarrays of a partition share one layout.
struct SubarrayLayout {
    int n_x = 0;
    int n_y = 0;
    double d_x = 0.0;
    double d_y = 0.0;
    double lambda = 0.0;

    int count() const { return n_x * n_y; }
};

/// Partition of an ArrayGeometry into a grid of contiguous rectangular
/// subarrays. index_map[m] lists the flat antenna indices of subarray m in
/// row-major local (p, q) order, matching the steering vector layout.
struct PartitionPlan {
    int m_x = 0; ///< subarray grid factor along x
    int m_y = 0; ///< subarray grid factor along y
    int m_count = 0;
    int sub_nx = 0;
    int sub_ny = 0;
    std::vector<Eigen::Vector3d> centers;    ///< arithmetic mean of member positions
    std::vector<std::vector<int>> index_map; ///< flat indices per subarray
    double sub_fraunhofer = 0.0;             ///< R_{m,F}, identical for all m
    SubarrayLayout layout;
};

/// Direction cosines of an arrival direction: theta_x = cos(omega) sin(phi),
/// theta_y = sin(omega) sin(phi). Satisfies theta_x^2 + theta_y^2 <= 1.
struct AoaPair {
    double theta_x = 0.0;
    double theta_y = 0.0;
};

struct FarFieldCheck {
    double distance = 0.0; ///< r_m, subarray center to source [m]
    double limit = 0.0;    ///< R_{m,F} [m]
    bool pass = false;     ///< limit < distance
};

struct FarFieldReport {
    std::vector<FarFieldCheck> subarrays;
    bool all_pass = false;
};

/// Builds a centered uniform planar array. Counts must be >= 1 and spacings
/// and wavelength positive; both odd and even counts are supported (even
/// counts shift the index set by half a step).
ArrayGeometry build_array(int n_x, int n_y, double d_x, double d_y, double lambda);

/// Fresnel and Fraunhofer distances of the full array aperture.
FieldBoundaries field_boundaries(const ArrayGeometry& geometry);

/// Splits the array into an m_x-by-m_y grid of contiguous subarrays. The
/// grid factors must divide the respective antenna counts.
PartitionPlan partition(const ArrayGeometry& geometry, int m_x, int m_y);

/// Checks, per subarray, that the source at p_source lies beyond the
/// subarray Fraunhofer distance. A failing check is reported, not an error.
FarFieldReport validate_far_field(const PartitionPlan& plan, const Eigen::Vector3d& p_source);

/// Direction cosines of the ray from `center` towards `p_source`:
/// theta_l = (p_source - center)^T e_l / ||p_source - center||.
AoaPair subarray_aoa(const Eigen::Vector3d& center, const Eigen::Vector3d& p_source);

} // namespace aple
