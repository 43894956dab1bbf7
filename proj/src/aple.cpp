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

#include "aple/aple.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "aple/rng.hpp"

namespace aple {

namespace {

constexpr double kPi = std::numbers::pi;

/// Highest-belief point of a coarse angular-by-log-range grid.
Eigen::Vector3d coarse_init_point(std::span<const VmFactor> factors,
                                  const InitGridSpec& spec, const FieldBoundaries& fb) {
    const double r_min = spec.r_min > 0.0 ? spec.r_min : std::max(fb.fresnel / 2.0, 1e-6);
    const double r_max = spec.r_max > 0.0 ? spec.r_max : std::max(2.0 * fb.fraunhofer, 2.0 * r_min);
    const int n_dir = std::max(spec.n_dir, 2);
    const int n_range = std::max(spec.n_range, 2);

    std::vector<Eigen::Vector3d> points;
    points.reserve(static_cast<std::size_t>(n_dir) * n_dir * n_range);
    const double log_lo = std::log(r_min);
    const double log_hi = std::log(r_max);
    for (int a = 0; a < n_dir; ++a) {
        const double tx = -0.95 + 1.9 * a / (n_dir - 1);
        for (int b = 0; b < n_dir; ++b) {
            const double ty = -0.95 + 1.9 * b / (n_dir - 1);
            const double t2 = tx * tx + ty * ty;
            if (t2 > 0.998) continue;
            const Eigen::Vector3d u(tx, ty, std::sqrt(1.0 - t2));
            for (int c = 0; c < n_range; ++c) {
                const double r =
                    std::exp(log_lo + (log_hi - log_lo) * c / (n_range - 1));
                points.push_back(r * u);
            }
        }
    }

    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::ArrayXd px(n), py(n), pz(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        px(i) = points[static_cast<std::size_t>(i)].x();
        py(i) = points[static_cast<std::size_t>(i)].y();
        pz(i) = points[static_cast<std::size_t>(i)].z();
    }
    Eigen::ArrayXd value = Eigen::ArrayXd::Zero(n);
    for (const VmFactor& f : factors) {
        const Eigen::ArrayXd ux = px - f.center.x();
        const Eigen::ArrayXd uy = py - f.center.y();
        const Eigen::ArrayXd uz = pz - f.center.z();
        const Eigen::ArrayXd r = (ux.square() + uy.square() + uz.square()).sqrt();
        const Eigen::ArrayXd theta =
            (ux * f.axis.x() + uy * f.axis.y() + uz * f.axis.z()) / r;
        value += f.kappa * (kPi * theta - f.mu).cos();
    }
    Eigen::Index best = 0;
    value.maxCoeff(&best);
    return points[static_cast<std::size_t>(best)];
}

VonMisesMsg damp_message(const VonMisesMsg& previous, const VonMisesMsg& fresh,
                         double damping) {
    if (damping <= 0.0) return fresh;
    const std::complex<double> nat = damping * std::polar(previous.kappa, previous.mu) +
                                     (1.0 - damping) * std::polar(fresh.kappa, fresh.mu);
    VonMisesMsg out;
    out.kappa = std::abs(nat);
    out.mu = out.kappa > 0.0 ? wrap_angle(std::arg(nat)) : 0.0;
    return out;
}

} // namespace

LocationEstimate run_aple(const Snapshot& snapshot, const PartitionPlan& plan,
                          const ArrayGeometry& geometry, double noise_var,
                          const ApleConfig& config) {
    const int m_count = plan.m_count;
    if (static_cast<int>(snapshot.slices.size()) != m_count)
        throw std::invalid_argument("run_aple: snapshot slices do not match the plan");
    if (config.n1 < 1) throw std::invalid_argument("run_aple: n1 must be >= 1");
    if (config.damping < 0.0 || config.damping >= 1.0)
        throw std::invalid_argument("run_aple: damping must be in [0, 1)");

    const FieldBoundaries fb = field_boundaries(geometry);
    const SubarrayLayout& layout = plan.layout;

    // Feedback priors, uniform at start; factor k = 2m + axis.
    std::vector<VonMisesMsg> priors(static_cast<std::size_t>(2 * m_count));
    std::vector<VmFactor> factors(static_cast<std::size_t>(2 * m_count));
    for (int m = 0; m < m_count; ++m) {
        for (int l = 0; l < 2; ++l) {
            VmFactor& f = factors[static_cast<std::size_t>(2 * m + l)];
            f.center = plan.centers[static_cast<std::size_t>(m)];
            f.axis = (l == 0) ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
        }
    }

    LocationEstimate est;
    est.per_subarray.resize(static_cast<std::size_t>(m_count));

    Eigen::Vector3d p_prev = Eigen::Vector3d::Zero();
    bool have_estimate = false;
    bool fusion_ok = true;

    for (int iter = 0; iter < config.n1; ++iter) {
        est.iterations_run = iter + 1;

        for (int m = 0; m < m_count; ++m) {
            const auto im = static_cast<std::size_t>(m);
            const VonMisesMsg& prior_x = priors[2 * im];
            const VonMisesMsg& prior_y = priors[2 * im + 1];
            AoaPosterior post = estimate_posterior(snapshot.slices[im], prior_x, prior_y,
                                                   layout, noise_var, config.aoa);
            factors[2 * im].mu = 0.0;
            factors[2 * im].kappa = 0.0;
            const VonMisesMsg ex = extrinsic_message(post.post_x, prior_x);
            const VonMisesMsg ey = extrinsic_message(post.post_y, prior_y);
            factors[2 * im].mu = ex.mu;
            factors[2 * im].kappa = ex.kappa;
            factors[2 * im + 1].mu = ey.mu;
            factors[2 * im + 1].kappa = ey.kappa;
            est.per_subarray[im] = std::move(post);
        }

        const Eigen::Vector3d init =
            have_estimate ? p_prev : coarse_init_point(factors, config.init_grid, fb);

        // Leave-one-out fusion and geometric feedback per (m, l).
        for (int k = 0; k < 2 * m_count; ++k) {
            const auto ik = static_cast<std::size_t>(k);
            const AscentResult ascent =
                map_location(factors, init, config.ascent, ik);
            fusion_ok = fusion_ok && ascent.converged;
            const GaussianBelief3D belief =
                belief_covariance(ascent.p, factors, ik, config.hessian_floor);
            const VonMisesMsg fresh = feedback_message(
                belief, factors[ik].center, factors[ik].axis, config.kappa_cap);
            priors[ik] = damp_message(priors[ik], fresh, config.damping);
        }

        const AscentResult full = map_location(factors, init, config.ascent);
        fusion_ok = fusion_ok && full.converged;
        const double moved = have_estimate ? (full.p - p_prev).norm()
                                           : std::numeric_limits<double>::infinity();
        p_prev = full.p;
        have_estimate = true;
        if (moved < config.early_exit_tol) break;
    }

    est.p_hat = p_prev;
    est.belief = belief_covariance(p_prev, factors, kNoExclusion, config.hessian_floor);
    est.converged = fusion_ok;
    est.final_gradient_norm = location_log_belief(p_prev, factors).gradient.norm();
    return est;
}

std::vector<ComplexityRow> complexity_probe(const ComplexityProbeConfig& config) {
    if (config.sizes.empty())
        throw std::invalid_argument("complexity_probe: no sizes given");
    std::vector<ComplexityRow> rows;
    rows.reserve(config.sizes.size());

    const double lambda = kSpeedOfLight / config.freq_hz;
    const double d = config.d_over_lambda * lambda;
    const Eigen::Vector3d direction =
        Eigen::Vector3d(0.2, 0.1, std::sqrt(1.0 - 0.05)).normalized();

    for (const auto& [n_x, m_x] : config.sizes) {
        const ArrayGeometry geometry = build_array(n_x, n_x, d, d, lambda);
        const PartitionPlan plan = partition(geometry, m_x, m_x);

        Scene scene;
        scene.p_user = config.range * direction;
        scene.rng_seed = derive_seed(config.seed, static_cast<std::uint64_t>(n_x));
        const Eigen::VectorXcd h = near_field_channel(geometry, scene);
        scene.noise_var = snr_to_noise_var(h, scene.pilot, config.snr_db);
        const Snapshot snap = synthesize_snapshot(h, scene, plan);

        // Warm-up run, also used to size the timing batches: short runs are
        // repeated until each measurement spans ~30 ms so scheduler noise
        // does not dominate the small array sizes.
        const auto w0 = std::chrono::steady_clock::now();
        volatile double sink =
            run_aple(snap, plan, geometry, scene.noise_var, config.aple).p_hat.x();
        const auto w1 = std::chrono::steady_clock::now();
        const double rough = std::chrono::duration<double>(w1 - w0).count();
        const int batch = std::max(1, static_cast<int>(std::ceil(0.03 / std::max(rough, 1e-6))));

        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(std::max(config.repeats, 1)));
        for (int rep = 0; rep < std::max(config.repeats, 1); ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            for (int b = 0; b < batch; ++b)
                sink = run_aple(snap, plan, geometry, scene.noise_var, config.aple).p_hat.x();
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count() / batch);
        }
        (void)sink;
        std::sort(times.begin(), times.end());
        rows.push_back(ComplexityRow{geometry.count(), times[times.size() / 2]});
    }
    return rows;
}

double loglog_slope(const std::vector<ComplexityRow>& rows) {
    if (rows.size() < 2)
        throw std::invalid_argument("loglog_slope: need at least two rows");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(rows.size());
    for (const auto& row : rows) {
        const double x = std::log(static_cast<double>(row.n_b));
        const double y = std::log(row.seconds);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace aple
