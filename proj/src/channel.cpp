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

#include "aple/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "aple/rng.hpp"

namespace aple {

Eigen::VectorXcd near_field_channel(const ArrayGeometry& geometry, const Scene& scene) {
    const double two_pi_over_lambda = 2.0 * std::numbers::pi / geometry.lambda;
    Eigen::VectorXcd h(geometry.count());
    for (int n = 0; n < geometry.count(); ++n) {
        const double r = (geometry.positions[static_cast<std::size_t>(n)] - scene.p_user).norm();
        if (r <= 0.0)
            throw std::invalid_argument("near_field_channel: source coincides with an antenna");
        const double rho = geometry.lambda / (4.0 * std::numbers::pi * r);
        const double phase = -two_pi_over_lambda * r;
        h(n) = scene.beta * std::polar(rho, phase);
    }
    return h;
}

Snapshot synthesize_snapshot(const Eigen::VectorXcd& h, const Scene& scene,
                             const PartitionPlan& plan) {
    const Eigen::Index n = h.size();
    Snapshot snap;
    snap.y = h * scene.pilot;
    if (scene.noise_var > 0.0) {
        auto engine = make_engine(scene.rng_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double scale = std::sqrt(scene.noise_var / 2.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double re = gauss(engine);
            const double im = gauss(engine);
            snap.y(i) += std::complex<double>(scale * re, scale * im);
        }
    }
    snap.slices.reserve(plan.index_map.size());
    for (const auto& members : plan.index_map) {
        Eigen::VectorXcd slice(static_cast<Eigen::Index>(members.size()));
        for (std::size_t k = 0; k < members.size(); ++k)
            slice(static_cast<Eigen::Index>(k)) = snap.y(members[k]);
        snap.slices.push_back(std::move(slice));
    }
    return snap;
}

Eigen::VectorXcd steering_vector(const SubarrayLayout& layout, const AoaPair& aoa) {
    if (std::abs(aoa.theta_x) > 1.0 || std::abs(aoa.theta_y) > 1.0)
        throw std::invalid_argument("steering_vector: direction cosines must be in [-1, 1]");
    const double cx = 2.0 * std::numbers::pi * layout.d_x * aoa.theta_x / layout.lambda;
    const double cy = 2.0 * std::numbers::pi * layout.d_y * aoa.theta_y / layout.lambda;
    Eigen::VectorXcd a(layout.count());
    int n = 0;
    for (int kp = 0; kp < layout.n_x; ++kp) {
        const double p = ArrayGeometry::axis_index(kp, layout.n_x);
        for (int kq = 0; kq < layout.n_y; ++kq) {
            const double q = ArrayGeometry::axis_index(kq, layout.n_y);
            a(n++) = std::polar(1.0, p * cx + q * cy);
        }
    }
    return a;
}

Eigen::VectorXcd predict_far_field(const SubarrayFarFieldModel& model,
                                   const SubarrayLayout& layout) {
    return model.alpha * steering_vector(layout, model.aoa);
}

double snr_to_noise_var(const Eigen::VectorXcd& h, std::complex<double> pilot,
                        double snr_db) {
    const double signal = (h * pilot).squaredNorm();
    if (signal <= 0.0)
        throw std::invalid_argument("snr_to_noise_var: channel has no energy");
    return signal / (static_cast<double>(h.size()) * std::pow(10.0, snr_db / 10.0));
}

} // namespace aple
