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

#include "aple/fusion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aple {

namespace {

constexpr double kPi = std::numbers::pi;

struct FactorGeometry {
    double r = 0.0;
    double theta = 0.0;
    Eigen::Vector3d u_hat = Eigen::Vector3d::Zero();
    Eigen::Vector3d grad_theta = Eigen::Vector3d::Zero();
};

FactorGeometry factor_geometry(const Eigen::Vector3d& p, const VmFactor& f) {
    FactorGeometry g;
    const Eigen::Vector3d u = p - f.center;
    g.r = u.norm();
    if (g.r <= 0.0)
        throw std::invalid_argument("location belief: point coincides with a subarray center");
    g.u_hat = u / g.r;
    g.theta = g.u_hat.dot(f.axis);
    g.grad_theta = (f.axis - g.theta * g.u_hat) / g.r;
    return g;
}

} // namespace

BeliefEval location_log_belief(const Eigen::Vector3d& p, std::span<const VmFactor> factors,
                               std::size_t exclude) {
    BeliefEval out;
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (k == exclude) continue;
        const VmFactor& f = factors[k];
        const FactorGeometry g = factor_geometry(p, f);
        const double ang = kPi * g.theta - f.mu;
        out.value += f.kappa * std::cos(ang);
        out.gradient += -f.kappa * kPi * std::sin(ang) * g.grad_theta;
    }
    return out;
}

Eigen::Matrix3d location_belief_hessian(const Eigen::Vector3d& p,
                                        std::span<const VmFactor> factors,
                                        std::size_t exclude) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (k == exclude) continue;
        const VmFactor& f = factors[k];
        const FactorGeometry g = factor_geometry(p, f);
        const double ang = kPi * g.theta - f.mu;
        const double s = std::sin(ang);
        const double c = std::cos(ang);
        // Hessian of theta(p): (3 theta u u^T - e u^T - u e^T - theta I) / r^2,
        // with u the unit vector from the center towards p.
        const Eigen::Matrix3d hess_theta =
            (3.0 * g.theta * g.u_hat * g.u_hat.transpose() -
             f.axis * g.u_hat.transpose() - g.u_hat * f.axis.transpose() -
             g.theta * Eigen::Matrix3d::Identity()) /
            (g.r * g.r);
        h += -f.kappa * kPi * kPi * c * g.grad_theta * g.grad_theta.transpose() -
             f.kappa * kPi * s * hess_theta;
    }
    return h;
}

AscentResult map_location(std::span<const VmFactor> factors, const Eigen::Vector3d& init,
                          const AscentConfig& config, std::size_t exclude) {
    AscentResult res;
    res.p = init;

    double center_scale = 1.0;
    for (const auto& f : factors) center_scale = std::max(center_scale, f.center.norm());
    const double radius =
        config.divergence_radius_scale * std::max(center_scale, init.norm());

    // Once value-based backtracking cannot improve (value differences fall
    // under machine precision), raw preconditioned steps that shrink the
    // gradient norm keep polishing towards the stated tolerance.
    // Newton ascent direction restricted to concave eigen-directions. Flat or
    // convex directions (degenerate range geometry, saddle ridges) carry no
    // trustworthy step; inverting them amplifies gradient noise and lets the
    // iterate slide along maximizer rays toward the array.
    auto newton_step = [&](const Eigen::Vector3d& p, const Eigen::Vector3d& grad,
                           double* curv_scale_out) {
        const Eigen::Matrix3d h = location_belief_hessian(p, factors, exclude);
        const double curv_scale = std::max(1.0, h.cwiseAbs().maxCoeff());
        if (curv_scale_out) *curv_scale_out = curv_scale;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(-h);
        const double cut = 1e-12 * curv_scale;
        const Eigen::Vector3d coeffs = es.eigenvectors().transpose() * grad;
        Eigen::Vector3d scaled = Eigen::Vector3d::Zero();
        for (int i = 0; i < 3; ++i)
            if (es.eigenvalues()(i) > cut) scaled(i) = coeffs(i) / es.eigenvalues()(i);
        Eigen::Vector3d step = es.eigenvectors() * scaled;
        if (step.dot(grad) <= 0.0) step = grad / curv_scale;
        return step;
    };

    // The gradient of a sum of kappa cos(pi theta) terms carries a rounding
    // floor of order eps * sum(kappa pi / r); below it the stated tolerance
    // is not representable.
    auto effective_tol = [&](const Eigen::Vector3d& p) {
        double scale = 0.0;
        for (std::size_t k = 0; k < factors.size(); ++k) {
            if (k == exclude) continue;
            const double r = (p - factors[k].center).norm();
            if (r > 0.0) scale += factors[k].kappa / r;
        }
        constexpr double eps = std::numeric_limits<double>::epsilon();
        return std::max(config.grad_tol, 32.0 * eps * kPi * scale);
    };

    BeliefEval cur = location_log_belief(res.p, factors, exclude);
    bool stalled = false;
    for (int it = 0; it < config.max_iter && !stalled; ++it) {
        res.iterations = it;
        if (cur.gradient.norm() <= effective_tol(res.p)) {
            res.converged = true;
            return res;
        }

        double curv_scale = 1.0;
        Eigen::Vector3d step = newton_step(res.p, cur.gradient, &curv_scale);
        const double max_step = 0.5 * std::max(1.0, res.p.norm());
        if (step.norm() > max_step) step *= max_step / step.norm();

        const double slope = cur.gradient.dot(step);
        double t = 1.0;
        bool accepted = false;
        while (t > 1e-14) {
            const Eigen::Vector3d cand = res.p + t * step;
            BeliefEval ce;
            try {
                ce = location_log_belief(cand, factors, exclude);
            } catch (const std::invalid_argument&) {
                t *= 0.5; // stepped onto a center
                continue;
            }
            if (ce.value >= cur.value + 1e-4 * t * slope && ce.value > cur.value) {
                res.p = cand;
                cur = ce;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        stalled = !accepted;
        if (res.p.norm() > radius) {
            res.converged = false;
            return res;
        }
    }

    for (int polish = 0; polish < 12; ++polish) {
        if (cur.gradient.norm() <= effective_tol(res.p)) break;
        const Eigen::Vector3d step = newton_step(res.p, cur.gradient, nullptr);
        const Eigen::Vector3d cand = res.p + step;
        BeliefEval ce;
        try {
            ce = location_log_belief(cand, factors, exclude);
        } catch (const std::invalid_argument&) {
            break;
        }
        if (ce.gradient.norm() >= cur.gradient.norm()) break;
        res.p = cand;
        cur = ce;
    }
    // Converged when the tolerance is met or no representable improvement
    // remains; running out of iterations with a live gradient is a failure.
    res.converged = res.p.norm() <= radius &&
                    (cur.gradient.norm() <= effective_tol(res.p) || stalled);
    return res;
}

GaussianBelief3D belief_covariance(const Eigen::Vector3d& p_hat,
                                   std::span<const VmFactor> factors, std::size_t exclude,
                                   double eig_floor) {
    GaussianBelief3D belief;
    belief.mean = p_hat;
    const Eigen::Matrix3d a = -location_belief_hessian(p_hat, factors, exclude);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(a);
    belief.well_conditioned = es.eigenvalues().minCoeff() > eig_floor;
    const Eigen::Vector3d evals = es.eigenvalues().cwiseMax(eig_floor);
    belief.cov = es.eigenvectors() * evals.cwiseInverse().asDiagonal() *
                 es.eigenvectors().transpose();
    belief.cov = 0.5 * (belief.cov + belief.cov.transpose()).eval();
    return belief;
}

FeedbackGeometry feedback_geometry(const Eigen::Vector3d& belief_mean,
                                   const Eigen::Vector3d& center,
                                   const Eigen::Vector3d& axis) {
    FeedbackGeometry g;
    g.u_bar = center - belief_mean;
    const double r = g.u_bar.norm();
    if (r <= 0.0)
        throw std::invalid_argument("feedback_geometry: belief mean coincides with the center");
    g.theta_bar = (belief_mean - center).dot(axis) / r;
    const Eigen::Vector3d w = (g.u_bar.cross(axis)).cross(g.u_bar);
    const double wn = w.norm();
    if (wn <= 1e-12 * r * r || std::abs(g.theta_bar) > 1.0 - 1e-9) {
        g.degenerate = true;
        g.v = Eigen::Vector3d::Zero();
        return g;
    }
    g.v = w / wn;
    return g;
}

VonMisesMsg feedback_message(const GaussianBelief3D& belief, const Eigen::Vector3d& center,
                             const Eigen::Vector3d& axis, double kappa_cap) {
    const FeedbackGeometry g = feedback_geometry(belief.mean, center, axis);
    VonMisesMsg msg;
    msg.mu = wrap_angle(kPi * g.theta_bar);
    if (g.degenerate) {
        msg.kappa = kappa_cap;
        return msg;
    }
    const double r2 = g.u_bar.squaredNorm();
    const double spread = g.v.dot(belief.cov * g.v);
    const double kappa = r2 / (kPi * kPi * (1.0 - g.theta_bar * g.theta_bar) * spread);
    msg.kappa = (std::isfinite(kappa) && kappa < kappa_cap) ? kappa : kappa_cap;
    return msg;
}

VonMisesMsg feedback_message(const GaussianBelief3D& belief, const Eigen::Vector3d& center,
                             int axis, double kappa_cap) {
    if (axis != 0 && axis != 1)
        throw std::invalid_argument("feedback_message: axis index must be 0 or 1");
    const Eigen::Vector3d e =
        (axis == 0) ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    return feedback_message(belief, center, e, kappa_cap);
}

} // namespace aple
