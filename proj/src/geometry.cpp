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

#include "aple/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace aple {

ArrayGeometry build_array(int n_x, int n_y, double d_x, double d_y, double lambda) {
    if (n_x < 1 || n_y < 1)
        throw std::invalid_argument("build_array: antenna counts must be >= 1");
    if (d_x <= 0.0 || d_y <= 0.0)
        throw std::invalid_argument("build_array: spacings must be positive");
    if (lambda <= 0.0)
        throw std::invalid_argument("build_array: wavelength must be positive");

    ArrayGeometry g;
    g.n_x = n_x;
    g.n_y = n_y;
    g.d_x = d_x;
    g.d_y = d_y;
    g.lambda = lambda;
    g.positions.reserve(static_cast<std::size_t>(n_x) * n_y);
    for (int kx = 0; kx < n_x; ++kx) {
        const double i = ArrayGeometry::axis_index(kx, n_x);
        for (int ky = 0; ky < n_y; ++ky) {
            const double j = ArrayGeometry::axis_index(ky, n_y);
            g.positions.emplace_back(i * d_x, j * d_y, 0.0);
        }
    }
    return g;
}

FieldBoundaries field_boundaries(const ArrayGeometry& geometry) {
    const double l_x = geometry.n_x * geometry.d_x;
    const double l_y = geometry.n_y * geometry.d_y;
    FieldBoundaries b;
    b.aperture = std::sqrt(l_x * l_x + l_y * l_y);
    b.fresnel = 0.62 * std::sqrt(b.aperture * b.aperture * b.aperture / geometry.lambda);
    b.fraunhofer = 2.0 * b.aperture * b.aperture / geometry.lambda;
    return b;
}

PartitionPlan partition(const ArrayGeometry& geometry, int m_x, int m_y) {
    if (m_x < 1 || m_y < 1)
        throw std::invalid_argument("partition: grid factors must be >= 1");
    if (geometry.n_x % m_x != 0)
        throw std::invalid_argument("partition: m_x = " + std::to_string(m_x) +
                                    " does not divide n_x = " + std::to_string(geometry.n_x));
    if (geometry.n_y % m_y != 0)
        throw std::invalid_argument("partition: m_y = " + std::to_string(m_y) +
                                    " does not divide n_y = " + std::to_string(geometry.n_y));

    PartitionPlan plan;
    plan.m_x = m_x;
    plan.m_y = m_y;
    plan.m_count = m_x * m_y;
    plan.sub_nx = geometry.n_x / m_x;
    plan.sub_ny = geometry.n_y / m_y;
    plan.layout = SubarrayLayout{plan.sub_nx, plan.sub_ny, geometry.d_x, geometry.d_y,
                                 geometry.lambda};

    const double l_mx = plan.sub_nx * geometry.d_x;
    const double l_my = plan.sub_ny * geometry.d_y;
    const double d_m = std::sqrt(l_mx * l_mx + l_my * l_my);
    plan.sub_fraunhofer = 2.0 * d_m * d_m / geometry.lambda;

    plan.centers.reserve(plan.m_count);
    plan.index_map.reserve(plan.m_count);
    for (int bx = 0; bx < m_x; ++bx) {
        for (int by = 0; by < m_y; ++by) {
            std::vector<int> members;
            members.reserve(static_cast<std::size_t>(plan.sub_nx) * plan.sub_ny);
            Eigen::Vector3d sum = Eigen::Vector3d::Zero();
            for (int p = 0; p < plan.sub_nx; ++p) {
                const int kx = bx * plan.sub_nx + p;
                for (int q = 0; q < plan.sub_ny; ++q) {
                    const int ky = by * plan.sub_ny + q;
                    const int flat = geometry.flat_index(kx, ky);
                    members.push_back(flat);
                    sum += geometry.positions[static_cast<std::size_t>(flat)];
                }
            }
            plan.centers.push_back(sum / static_cast<double>(members.size()));
            plan.index_map.push_back(std::move(members));
        }
    }
    return plan;
}

FarFieldReport validate_far_field(const PartitionPlan& plan, const Eigen::Vector3d& p_source) {
    FarFieldReport report;
    report.subarrays.reserve(plan.centers.size());
    report.all_pass = true;
    for (const auto& center : plan.centers) {
        FarFieldCheck check;
        check.distance = (center - p_source).norm();
        check.limit = plan.sub_fraunhofer;
        check.pass = check.limit < check.distance;
        report.all_pass = report.all_pass && check.pass;
        report.subarrays.push_back(check);
    }
    return report;
}

AoaPair subarray_aoa(const Eigen::Vector3d& center, const Eigen::Vector3d& p_source) {
    const Eigen::Vector3d u = p_source - center;
    const double r = u.norm();
    if (r <= 0.0)
        throw std::invalid_argument("subarray_aoa: source coincides with the subarray center");
    return AoaPair{u.x() / r, u.y() / r};
}

} // namespace aple
