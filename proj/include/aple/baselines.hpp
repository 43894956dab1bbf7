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
#include <stdexcept>
#include <string>
#include <vector>

#include "aple/channel.hpp"
#include "aple/geometry.hpp"

namespace aple {

/// Spherical search grid: ranges r, azimuths omega, elevations phi. A grid
/// point maps to p = r [cos(omega) sin(phi), sin(omega) sin(phi), cos(phi)].
/// Flat index order: ((ir * n_omega) + iomega) * n_phi + iphi.
struct PolarGrid {
    std::vector<double> r_points;
    std::vector<double> omega_points;
    std::vector<double> phi_points;

    static PolarGrid regular(double r_min, double r_max, double r_step,
                             double omega_min, double omega_max, double omega_step,
                             double phi_min, double phi_max, double phi_step);

    /// Default search region: front hemisphere, r in [R_N/2, 2 R_F].
    static PolarGrid default_region(const ArrayGeometry& geometry, double r_step,
                                    double angle_step_rad);

    std::size_t size() const {
        return r_points.size() * omega_points.size() * phi_points.size();
    }
    Eigen::Vector3d point(std::size_t flat) const;
};

/// Exhaustive grid maximizer of the concentrated likelihood
/// |h(p)^H y|^2 / ||h(p)||^2 with h the exact near-field channel.
/// Ties break to the lowest flat index.
Eigen::Vector3d mle_grid_oracle(const Snapshot& snapshot, const ArrayGeometry& geometry,
                                const PolarGrid& grid);

class DictionaryBudgetError : public std::runtime_error {
  public:
    explicit DictionaryBudgetError(const std::string& what) : std::runtime_error(what) {}
};

struct OmpConfig {
    std::size_t max_dictionary_bytes = std::size_t{1} << 30; ///< 1 GiB default
    int n_iter = 1; ///< greedy atoms; the location is the first selection
};

/// Greedy matching over a precomputed dictionary of unit-norm exact
/// near-field atoms, one per grid point. For the single-path model the
/// returned point coincides with mle_grid_oracle. Dictionaries exceeding
/// the byte budget are refused with DictionaryBudgetError.
Eigen::Vector3d omp_polar(const Snapshot& snapshot, const ArrayGeometry& geometry,
                          const PolarGrid& grid, const OmpConfig& config = {});

} // namespace aple
