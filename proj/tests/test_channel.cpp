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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aple/channel.hpp"
#include "aple/geometry.hpp"

using namespace aple;

namespace {
const double kLambda = kSpeedOfLight / 28e9;
const double kPi = std::numbers::pi;
} // namespace

TEST_CASE("single antenna one wavelength away wraps the phase to zero") {
    const auto g = build_array(1, 1, 0.01, 0.01, kLambda);
    Scene scene;
    scene.p_user = Eigen::Vector3d(0, 0, kLambda);
    const auto h = near_field_channel(g, scene);
    REQUIRE(h.size() == 1);
    CHECK(h(0).real() == doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-12));
    CHECK(std::abs(h(0).imag()) < 1e-12);
}

TEST_CASE("channel modulus is the free-space path loss") {
    const auto g = build_array(5, 7, kLambda / 2, kLambda / 2, kLambda);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        Scene scene;
        scene.p_user = Eigen::Vector3d(uni(rng), uni(rng), 1.0 + std::abs(uni(rng)));
        scene.beta = std::complex<double>(uni(rng), uni(rng));
        const auto h = near_field_channel(g, scene);
        for (int n = 0; n < g.count(); ++n) {
            const double r = (g.positions[static_cast<std::size_t>(n)] - scene.p_user).norm();
            CHECK(std::abs(h(n)) ==
                  doctest::Approx(std::abs(scene.beta) * kLambda / (4 * kPi * r)));
        }
    }
}

TEST_CASE("channel phase recomputes from the distances") {
    const auto g = build_array(4, 6, kLambda / 2, kLambda / 3, kLambda);
    Scene scene;
    scene.p_user = Eigen::Vector3d(0.13, -0.07, 0.9);
    const auto h = near_field_channel(g, scene);
    for (int n = 0; n < g.count(); ++n) {
        const double r = (g.positions[static_cast<std::size_t>(n)] - scene.p_user).norm();
        const double expected = -2.0 * kPi * r / kLambda;
        const double diff = std::remainder(std::arg(h(n)) - expected, 2.0 * kPi);
        CHECK(std::abs(diff) < 1e-9);
    }
}

TEST_CASE("corner antennas of a boresight source share one coefficient") {
    const auto g = build_array(3, 3, kLambda / 2, kLambda / 2, kLambda);
    Scene scene;
    scene.p_user = Eigen::Vector3d(0, 0, 1.0);
    const auto h = near_field_channel(g, scene);
    const int corners[4] = {g.flat_index(0, 0), g.flat_index(0, 2), g.flat_index(2, 0),
                            g.flat_index(2, 2)};
    for (int k = 1; k < 4; ++k) CHECK(std::abs(h(corners[k]) - h(corners[0])) < 1e-15);
}

TEST_CASE("source on an antenna is rejected") {
    const auto g = build_array(3, 3, 0.005, 0.005, kLambda);
    Scene scene;
    scene.p_user = g.positions[4];
    CHECK_THROWS_AS(near_field_channel(g, scene), std::invalid_argument);
}

TEST_CASE("noiseless snapshot equals the scaled channel and slices reassemble") {
    const auto g = build_array(6, 6, kLambda / 2, kLambda / 2, kLambda);
    const auto plan = partition(g, 2, 3);
    Scene scene;
    scene.p_user = Eigen::Vector3d(0.1, 0.2, 1.5);
    scene.pilot = std::complex<double>(0.6, -0.8);
    const auto h = near_field_channel(g, scene);
    const auto snap = synthesize_snapshot(h, scene, plan);
    CHECK((snap.y - h * scene.pilot).norm() == 0.0);

    Eigen::VectorXcd rebuilt = Eigen::VectorXcd::Zero(g.count());
    for (std::size_t m = 0; m < plan.index_map.size(); ++m)
        for (std::size_t k = 0; k < plan.index_map[m].size(); ++k)
            rebuilt(plan.index_map[m][k]) = snap.slices[m](static_cast<Eigen::Index>(k));
    CHECK((rebuilt - snap.y).norm() == 0.0);
}

TEST_CASE("snapshots are deterministic in the seed") {
    const auto g = build_array(4, 4, kLambda / 2, kLambda / 2, kLambda);
    const auto plan = partition(g, 2, 2);
    Scene scene;
    scene.p_user = Eigen::Vector3d(0, 0, 1.0);
    scene.noise_var = 1e-9;
    scene.rng_seed = 42;
    const auto h = near_field_channel(g, scene);
    const auto a = synthesize_snapshot(h, scene, plan);
    const auto b = synthesize_snapshot(h, scene, plan);
    CHECK((a.y - b.y).norm() == 0.0);

    scene.rng_seed = 43;
    const auto c = synthesize_snapshot(h, scene, plan);
    CHECK((a.y - c.y).norm() > 0.0);
}

TEST_CASE("empirical noise variance matches the requested one") {
    const auto g = build_array(10, 10, kLambda / 2, kLambda / 2, kLambda);
    const auto plan = partition(g, 1, 1);
    Scene scene;
    scene.p_user = Eigen::Vector3d(0, 0, 1.0);
    scene.noise_var = 2.5e-9;
    const auto h = near_field_channel(g, scene);
    const Eigen::VectorXcd clean = h * scene.pilot;

    double acc = 0.0;
    const int snapshots = 1000; // 1e5 noise draws in total
    for (int s = 0; s < snapshots; ++s) {
        scene.rng_seed = static_cast<std::uint64_t>(s) + 1;
        const auto snap = synthesize_snapshot(h, scene, plan);
        acc += (snap.y - clean).squaredNorm();
    }
    const double measured = acc / (static_cast<double>(snapshots) * g.count());
    CHECK(std::abs(measured - scene.noise_var) / scene.noise_var < 0.02);
}

TEST_CASE("steering vector basics") {
    const SubarrayLayout layout{6, 5, kLambda / 2, kLambda / 2, kLambda};
    const auto ones = steering_vector(layout, AoaPair{0.0, 0.0});
    for (int n = 0; n < layout.count(); ++n) CHECK(std::abs(ones(n) - 1.0) < 1e-15);

    const AoaPair aoa{0.37, -0.21};
    const auto a = steering_vector(layout, aoa);
    for (int n = 0; n < layout.count(); ++n)
        CHECK(std::abs(std::abs(a(n)) - 1.0) < 1e-14);

    // Conjugation under direction reversal.
    const auto b = steering_vector(layout, AoaPair{-aoa.theta_x, -aoa.theta_y});
    CHECK((b - a.conjugate()).norm() < 1e-12);

    CHECK_THROWS_AS(steering_vector(layout, AoaPair{1.2, 0.0}), std::invalid_argument);
}

TEST_CASE("steering vector is the Kronecker product of the axis responses") {
    const SubarrayLayout layout{4, 3, kLambda / 2, kLambda / 4, kLambda};
    const AoaPair aoa{0.3, 0.55};
    const auto a = steering_vector(layout, aoa);
    for (int kp = 0; kp < layout.n_x; ++kp) {
        const double p = ArrayGeometry::axis_index(kp, layout.n_x);
        const std::complex<double> ax =
            std::polar(1.0, 2.0 * kPi * p * layout.d_x * aoa.theta_x / kLambda);
        for (int kq = 0; kq < layout.n_y; ++kq) {
            const double q = ArrayGeometry::axis_index(kq, layout.n_y);
            const std::complex<double> ay =
                std::polar(1.0, 2.0 * kPi * q * layout.d_y * aoa.theta_y / kLambda);
            CHECK(std::abs(a(kp * layout.n_y + kq) - ax * ay) < 1e-14);
        }
    }
}

TEST_CASE("far-field model phase error stays under the Fraunhofer bound") {
    // 36x36 split 6x6, boresight source exactly at the subarray boundary.
    const auto g = build_array(36, 36, kLambda / 2, kLambda / 2, kLambda);
    const auto plan = partition(g, 6, 6);
    const SubarrayLayout layout = plan.layout;

    auto worst_phase_error = [&](double r) {
        // Center subarray of the partition; reference at its center.
        int m = 0;
        for (int k = 0; k < plan.m_count; ++k)
            if (plan.centers[static_cast<std::size_t>(k)].norm() <
                plan.centers[static_cast<std::size_t>(m)].norm())
                m = k;
        const Eigen::Vector3d center = plan.centers[static_cast<std::size_t>(m)];
        const Eigen::Vector3d p_user = center + Eigen::Vector3d(0, 0, r);
        const auto aoa = subarray_aoa(center, p_user);
        const auto a = steering_vector(layout, aoa);
        const double r_ref = (p_user - center).norm();
        double worst = 0.0;
        int idx = 0;
        for (int antenna : plan.index_map[static_cast<std::size_t>(m)]) {
            const double r_n =
                (g.positions[static_cast<std::size_t>(antenna)] - p_user).norm();
            const double exact = -2.0 * kPi * (r_n - r_ref) / kLambda;
            const double model = std::arg(a(idx++));
            worst = std::max(worst, std::abs(std::remainder(exact - model, 2.0 * kPi)));
        }
        return worst;
    };

    const double r_mf = plan.sub_fraunhofer;
    CHECK(worst_phase_error(r_mf) <= kPi / 8.0 * (1.0 + 1e-6));
    CHECK(worst_phase_error(10.0 * r_mf) < kPi / 8.0 * 0.1);
}

TEST_CASE("snr mapping definition and scaling") {
    const auto g = build_array(8, 8, kLambda / 2, kLambda / 2, kLambda);
    Scene scene;
    scene.p_user = Eigen::Vector3d(0.05, 0.0, 1.2);
    const auto h = near_field_channel(g, scene);

    const double s0 = snr_to_noise_var(h, scene.pilot, 0.0);
    CHECK(s0 == doctest::Approx((h * scene.pilot).squaredNorm() / g.count()));
    const double s10 = snr_to_noise_var(h, scene.pilot, 10.0);
    CHECK(s10 == doctest::Approx(s0 / 10.0));
}

TEST_CASE("snr round-trips through snapshot synthesis within one percent") {
    const auto g = build_array(30, 30, kLambda / 4, kLambda / 4, kLambda);
    const auto plan = partition(g, 3, 3);
    Scene scene;
    scene.p_user = Eigen::Vector3d(0.2, -0.1, 2.0);
    const auto h = near_field_channel(g, scene);
    scene.noise_var = snr_to_noise_var(h, scene.pilot, 20.0);
    const Eigen::VectorXcd clean = h * scene.pilot;

    double noise_power = 0.0;
    const int snapshots = 300;
    for (int s = 0; s < snapshots; ++s) {
        scene.rng_seed = static_cast<std::uint64_t>(s) + 101;
        const auto snap = synthesize_snapshot(h, scene, plan);
        noise_power += (snap.y - clean).squaredNorm();
    }
    noise_power /= static_cast<double>(snapshots) * g.count();
    const double measured_snr =
        10.0 * std::log10(clean.squaredNorm() / g.count() / noise_power);
    CHECK(std::abs(measured_snr - 20.0) < 10.0 * std::log10(1.01) * 5); // ~1% in power
    CHECK(std::abs(noise_power - scene.noise_var) / scene.noise_var < 0.01);
}

TEST_CASE("predicted far-field signal has constant modulus") {
    const SubarrayLayout layout{5, 5, kLambda / 2, kLambda / 2, kLambda};
    SubarrayFarFieldModel model;
    model.alpha = std::complex<double>(0.3, -0.4);
    model.aoa = AoaPair{0.2, 0.1};
    const auto s = predict_far_field(model, layout);
    for (int n = 0; n < layout.count(); ++n)
        CHECK(std::abs(s(n)) == doctest::Approx(std::abs(model.alpha)));
}
