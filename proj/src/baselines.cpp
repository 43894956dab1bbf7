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

#include "aple/baselines.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aple {

namespace {

std::vector<double> axis_points(double lo, double hi, double step) {
    if (step <= 0.0) throw std::invalid_argument("polar grid: step must be positive");
    if (hi < lo) throw std::invalid_argument("polar grid: empty axis range");
    std::vector<double> pts;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    pts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) pts.push_back(lo + static_cast<double>(i) * step);
    return pts;
}

/// Correlation statistic |h(p)^H y|^2 / ||h(p)||^2 with h the exact channel
/// at unit gain; gain and pilot scale out.
double concentrated_likelihood(const Eigen::Vector3d& p, const ArrayGeometry& geometry,
                               const Eigen::VectorXcd& y) {
    const double k = 2.0 * std::numbers::pi / geometry.lambda;
    std::complex<double> dot(0.0, 0.0);
    double energy = 0.0;
    for (int n = 0; n < geometry.count(); ++n) {
        const double r = (geometry.positions[static_cast<std::size_t>(n)] - p).norm();
        if (r <= 0.0) return 0.0; // a source on an antenna is outside the model
        const double rho = geometry.lambda / (4.0 * std::numbers::pi * r);
        const std::complex<double> h = std::polar(rho, -k * r);
        dot += std::conj(h) * y(n);
        energy += rho * rho;
    }
    return std::norm(dot) / energy;
}

} // namespace

PolarGrid PolarGrid::regular(double r_min, double r_max, double r_step, double omega_min,
                             double omega_max, double omega_step, double phi_min,
                             double phi_max, double phi_step) {
    PolarGrid g;
    g.r_points = axis_points(r_min, r_max, r_step);
    g.omega_points = axis_points(omega_min, omega_max, omega_step);
    g.phi_points = axis_points(phi_min, phi_max, phi_step);
    return g;
}

PolarGrid PolarGrid::default_region(const ArrayGeometry& geometry, double r_step,
                                    double angle_step_rad) {
    const FieldBoundaries fb = field_boundaries(geometry);
    const double pi = std::numbers::pi;
    return regular(fb.fresnel / 2.0, 2.0 * fb.fraunhofer, r_step, -pi, pi, angle_step_rad,
                   0.0, pi / 2.0, angle_step_rad);
}

Eigen::Vector3d PolarGrid::point(std::size_t flat) const {
    const std::size_t n_phi = phi_points.size();
    const std::size_t n_omega = omega_points.size();
    const std::size_t iphi = flat % n_phi;
    const std::size_t iomega = (flat / n_phi) % n_omega;
    const std::size_t ir = flat / (n_phi * n_omega);
    const double r = r_points[ir];
    const double omega = omega_points[iomega];
    const double phi = phi_points[iphi];
    return {r * std::cos(omega) * std::sin(phi), r * std::sin(omega) * std::sin(phi),
            r * std::cos(phi)};
}

Eigen::Vector3d mle_grid_oracle(const Snapshot& snapshot, const ArrayGeometry& geometry,
                                const PolarGrid& grid) {
    const std::size_t total = grid.size();
    if (total == 0) throw std::invalid_argument("mle_grid_oracle: empty grid");
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < total; ++i) {
        const double score = concentrated_likelihood(grid.point(i), geometry, snapshot.y);
        if (score > best) { // strict: ties keep the lowest flat index
            best = score;
            best_idx = i;
        }
    }
    return grid.point(best_idx);
}

Eigen::Vector3d omp_polar(const Snapshot& snapshot, const ArrayGeometry& geometry,
                          const PolarGrid& grid, const OmpConfig& config) {
    const std::size_t total = grid.size();
    if (total == 0) throw std::invalid_argument("omp_polar: empty grid");
    const std::size_t n_b = static_cast<std::size_t>(geometry.count());
    const std::size_t bytes = total * n_b * sizeof(std::complex<double>);
    if (bytes > config.max_dictionary_bytes)
        throw DictionaryBudgetError(
            "omp_polar: dictionary of " + std::to_string(total) + " atoms needs " +
            std::to_string(bytes) + " bytes, budget is " +
            std::to_string(config.max_dictionary_bytes) + " bytes");

    // Precompute unit-norm exact near-field atoms, one column per grid point.
    Eigen::MatrixXcd atoms(static_cast<Eigen::Index>(n_b), static_cast<Eigen::Index>(total));
    const double k = 2.0 * std::numbers::pi / geometry.lambda;
    for (std::size_t i = 0; i < total; ++i) {
        const Eigen::Vector3d p = grid.point(i);
        auto col = atoms.col(static_cast<Eigen::Index>(i));
        for (int a = 0; a < geometry.count(); ++a) {
            const double r = (geometry.positions[static_cast<std::size_t>(a)] - p).norm();
            const double rho = r > 0.0 ? geometry.lambda / (4.0 * std::numbers::pi * r) : 0.0;
            col(a) = std::polar(rho, -k * r);
        }
        const double norm = col.norm();
        if (norm > 0.0) col /= norm;
    }

    Eigen::VectorXcd residual = snapshot.y;
    std::vector<Eigen::Index> selected;
    selected.reserve(static_cast<std::size_t>(std::max(config.n_iter, 1)));
    for (int it = 0; it < std::max(config.n_iter, 1); ++it) {
        double best = -1.0;
        Eigen::Index best_idx = 0;
        for (std::size_t i = 0; i < total; ++i) {
            const double score =
                std::norm(atoms.col(static_cast<Eigen::Index>(i)).dot(residual));
            if (score > best) {
                best = score;
                best_idx = static_cast<Eigen::Index>(i);
            }
        }
        selected.push_back(best_idx);
        Eigen::MatrixXcd sub(atoms.rows(), static_cast<Eigen::Index>(selected.size()));
        for (std::size_t s = 0; s < selected.size(); ++s)
            sub.col(static_cast<Eigen::Index>(s)) = atoms.col(selected[s]);
        const Eigen::VectorXcd coef = sub.colPivHouseholderQr().solve(snapshot.y);
        residual = snapshot.y - sub * coef;
    }
    // Single LoS path: the strongest (first selected) atom is the location.
    return grid.point(static_cast<std::size_t>(selected.front()));
}

} // namespace aple
