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

#include "aple/aoa_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "aple/fft.hpp"

namespace aple {

namespace {

using Complex = std::complex<double>;

constexpr double kMinKappa = 1e-8;

/// Weighted correlations of the snapshot against a phase-only tone and the
/// polynomial moments needed for first and second derivatives in the two
/// direction cosines.
struct ToneMoments {
    Complex c, cx, cy, cxx, cxy, cyy;
};

/// Precomputed per-antenna data for fast objective evaluations.
class ToneWorkspace {
  public:
    ToneWorkspace(const Eigen::VectorXcd& y, const SubarrayLayout& layout) {
        const int n = layout.count();
        px_.resize(n);
        qy_.resize(n);
        const double sx = 2.0 * std::numbers::pi * layout.d_x / layout.lambda;
        const double sy = 2.0 * std::numbers::pi * layout.d_y / layout.lambda;
        int idx = 0;
        for (int kp = 0; kp < layout.n_x; ++kp) {
            const double p = ArrayGeometry::axis_index(kp, layout.n_x);
            for (int kq = 0; kq < layout.n_y; ++kq) {
                const double q = ArrayGeometry::axis_index(kq, layout.n_y);
                px_(idx) = sx * p;
                qy_(idx) = sy * q;
                ++idx;
            }
        }
        y_re_ = y.real().array();
        y_im_ = y.imag().array();
        w_[0] = Eigen::ArrayXd::Ones(n);
        w_[1] = px_;
        w_[2] = qy_;
        w_[3] = px_ * px_;
        w_[4] = px_ * qy_;
        w_[5] = qy_ * qy_;
        for (int k = 0; k < 6; ++k) {
            wy_re_[k] = w_[k] * y_re_;
            wy_im_[k] = w_[k] * y_im_;
        }
    }

    /// c-moments at (theta_x, theta_y): c_w = sum_n w_n y_n e^{-j phi_n},
    /// phi_n = px_n theta_x + qy_n theta_y.
    ToneMoments moments(double theta_x, double theta_y) const {
        const Eigen::ArrayXd phase = px_ * theta_x + qy_ * theta_y;
        const Eigen::ArrayXd c = phase.cos();
        const Eigen::ArrayXd s = phase.sin();
        Complex out[6];
        for (int k = 0; k < 6; ++k) {
            const double re = (wy_re_[k] * c + wy_im_[k] * s).sum();
            const double im = (wy_im_[k] * c - wy_re_[k] * s).sum();
            out[k] = Complex(re, im);
        }
        return ToneMoments{out[0], out[1], out[2], out[3], out[4], out[5]};
    }

  private:
    Eigen::ArrayXd px_, qy_, y_re_, y_im_;
    Eigen::ArrayXd w_[6];
    Eigen::ArrayXd wy_re_[6], wy_im_[6];
};

struct ObjectiveEval {
    double value = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
    Complex c{0.0, 0.0};
};

struct Objective {
    const ToneWorkspace* ws = nullptr;
    double likelihood_scale = 0.0; ///< 1 / (sigma_m^2 N_eff)
    VonMisesMsg prior_x;
    VonMisesMsg prior_y;

    ObjectiveEval eval(double tx, double ty) const {
        const ToneMoments m = ws->moments(tx, ty);
        ObjectiveEval e;
        e.c = m.c;
        const double g = std::norm(m.c);
        const double dgx = 2.0 * std::imag(std::conj(m.c) * m.cx);
        const double dgy = 2.0 * std::imag(std::conj(m.c) * m.cy);
        const double hxx = 2.0 * (std::norm(m.cx) - std::real(std::conj(m.c) * m.cxx));
        const double hyy = 2.0 * (std::norm(m.cy) - std::real(std::conj(m.c) * m.cyy));
        const double hxy = 2.0 * (std::real(std::conj(m.cy) * m.cx) -
                                  std::real(std::conj(m.c) * m.cxy));

        const double pi = std::numbers::pi;
        const double ax = pi * tx - prior_x.mu;
        const double ay = pi * ty - prior_y.mu;
        e.value = g * likelihood_scale + prior_x.kappa * std::cos(ax) +
                  prior_y.kappa * std::cos(ay);
        e.grad(0) = dgx * likelihood_scale - prior_x.kappa * pi * std::sin(ax);
        e.grad(1) = dgy * likelihood_scale - prior_y.kappa * pi * std::sin(ay);
        e.hess(0, 0) = hxx * likelihood_scale - prior_x.kappa * pi * pi * std::cos(ax);
        e.hess(1, 1) = hyy * likelihood_scale - prior_y.kappa * pi * pi * std::cos(ay);
        e.hess(0, 1) = e.hess(1, 0) = hxy * likelihood_scale;
        return e;
    }
};

struct GridPick {
    double tx = 0.0;
    double ty = 0.0;
};

/// Prior-weighted zero-padded periodogram over the valid direction cosines.
GridPick coarse_grid_search(const Eigen::VectorXcd& y, const SubarrayLayout& layout,
                            const Objective& obj, int pad_factor) {
    const std::size_t kx = fft::next_pow2(static_cast<std::size_t>(pad_factor) * layout.n_x);
    const std::size_t ky = fft::next_pow2(static_cast<std::size_t>(pad_factor) * layout.n_y);
    Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(kx),
                                                static_cast<Eigen::Index>(ky));
    for (int p = 0; p < layout.n_x; ++p)
        for (int q = 0; q < layout.n_y; ++q) z(p, q) = y(p * layout.n_y + q);
    fft::transform2d(z, false);

    // Bin k maps to frequency k/K wrapped to [-1/2, 1/2), and the direction
    // cosine is theta = f * lambda / d. The symmetric antenna index offset
    // only contributes a global phase, so |Z| is the periodogram magnitude.
    const double fx_to_theta = layout.lambda / layout.d_x;
    const double fy_to_theta = layout.lambda / layout.d_y;
    const double pi = std::numbers::pi;

    GridPick pick;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t ix = 0; ix < kx; ++ix) {
        double fx = static_cast<double>(ix) / static_cast<double>(kx);
        if (fx >= 0.5) fx -= 1.0;
        const double tx = fx * fx_to_theta;
        if (std::abs(tx) > 1.0) continue;
        const double prior_tx = obj.prior_x.kappa * std::cos(pi * tx - obj.prior_x.mu);
        for (std::size_t iy = 0; iy < ky; ++iy) {
            double fy = static_cast<double>(iy) / static_cast<double>(ky);
            if (fy >= 0.5) fy -= 1.0;
            const double ty = fy * fy_to_theta;
            if (std::abs(ty) > 1.0) continue;
            const double value =
                std::norm(z(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(iy))) *
                    obj.likelihood_scale +
                prior_tx + obj.prior_y.kappa * std::cos(pi * ty - obj.prior_y.mu);
            if (value > best) {
                best = value;
                pick = GridPick{tx, ty};
            }
        }
    }
    return pick;
}

struct NewtonResult {
    double tx = 0.0;
    double ty = 0.0;
    ObjectiveEval eval;
    bool converged = false;
    bool improved = false;
};

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

/// Ascending Newton refinement with eigenvalue-safeguarded steps and
/// backtracking; never returns a point below the starting value.
NewtonResult newton_refine(const Objective& obj, double tx0, double ty0, int cap,
                           double grad_tol) {
    NewtonResult res;
    res.tx = tx0;
    res.ty = ty0;
    res.eval = obj.eval(tx0, ty0);

    for (int it = 0; it < cap; ++it) {
        const Eigen::Vector2d g = res.eval.grad;
        const Eigen::Matrix2d h = res.eval.hess;

        const double curv_scale =
            std::max({std::abs(h(0, 0)), std::abs(h(1, 1)), std::abs(h(0, 1)), 1.0});
        if (g.norm() <= grad_tol * curv_scale) {
            res.converged = true;
            return res;
        }

        // Negated-Hessian eigenvalue floor keeps the step an ascent direction.
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(-h);
        Eigen::Vector2d evals = es.eigenvalues().cwiseMax(1e-9 * curv_scale);
        const Eigen::Matrix2d precond = es.eigenvectors() *
                                        evals.cwiseInverse().asDiagonal() *
                                        es.eigenvectors().transpose();
        Eigen::Vector2d step = precond * g;
        const double max_step = 0.5;
        if (step.norm() > max_step) step *= max_step / step.norm();

        const double slope = g.dot(step);
        double t = 1.0;
        bool accepted = false;
        while (t > 1e-12) {
            const double cx = clamp_unit(res.tx + t * step(0));
            const double cy = clamp_unit(res.ty + t * step(1));
            const ObjectiveEval cand = obj.eval(cx, cy);
            if (cand.value >= res.eval.value + 1e-4 * t * slope &&
                cand.value >= res.eval.value) {
                res.tx = cx;
                res.ty = cy;
                res.eval = cand;
                res.improved = true;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // Numerical stall: no representable improvement remains.
            res.converged = res.improved || res.eval.grad.norm() <= 1e-6 * curv_scale;
            return res;
        }
    }
    const double curv_scale = std::max(
        {std::abs(res.eval.hess(0, 0)), std::abs(res.eval.hess(1, 1)), 1.0});
    res.converged = res.eval.grad.norm() <= grad_tol * curv_scale * 1e3;
    return res;
}

/// Centered second difference of the objective along one axis.
double fd_curvature(const Objective& obj, double tx, double ty, int axis) {
    const double h = 1e-5;
    auto at = [&](double dx, double dy) { return obj.eval(tx + dx, ty + dy).value; };
    const double dp = (axis == 0) ? h : 0.0;
    const double dq = (axis == 0) ? 0.0 : h;
    return (at(dp, dq) - 2.0 * at(0.0, 0.0) + at(-dp, -dq)) / (h * h);
}

} // namespace

AoaPosterior estimate_posterior(const Eigen::VectorXcd& y_m, const VonMisesMsg& prior_x,
                                const VonMisesMsg& prior_y, const SubarrayLayout& layout,
                                double sigma2, const AoaEstimatorConfig& config) {
    const int n = layout.count();
    if (y_m.size() != n)
        throw std::invalid_argument("estimate_posterior: snapshot length does not match layout");
    if (prior_x.kappa < 0.0 || prior_y.kappa < 0.0)
        throw std::invalid_argument("estimate_posterior: prior kappa must be >= 0");
    if (sigma2 < 0.0)
        throw std::invalid_argument("estimate_posterior: noise variance must be >= 0");

    const double mean_power = y_m.squaredNorm() / std::max(n, 1);
    const double sigma_alpha2 = std::max(config.gain_prior_scale * mean_power, 1e-300);
    // Keep the weighting finite in the exactly noiseless case.
    const double sigma_floor = std::max(1e-12 * mean_power, 1e-300);

    ToneWorkspace ws(y_m, layout);
    Objective obj;
    obj.ws = &ws;
    obj.prior_x = prior_x;
    obj.prior_y = prior_y;

    auto weight = [&](double s2) {
        const double s2e = std::max(s2, sigma_floor);
        const double n_eff = n + s2e / sigma_alpha2;
        obj.likelihood_scale = 1.0 / (s2e * n_eff);
        return n_eff;
    };

    double n_eff = weight(sigma2);
    const GridPick grid = coarse_grid_search(y_m, layout, obj, config.pad_factor);
    NewtonResult nr =
        newton_refine(obj, grid.tx, grid.ty, config.newton_cap, config.grad_tol);

    auto residual_of = [&](const NewtonResult& r, double eff) {
        const double g = std::norm(r.eval.c);
        const double resid =
            y_m.squaredNorm() - g * (2.0 * eff - n) / (eff * eff);
        return std::max(resid, 0.0) / n;
    };

    // Subarray noise exceeds the entry noise under model mismatch; refit with
    // the residual-based estimate so the posterior width reflects it.
    double sigma_m2 = std::max(sigma2, residual_of(nr, n_eff));
    if (sigma_m2 > std::max(sigma2, sigma_floor) * (1.0 + 1e-9)) {
        n_eff = weight(sigma_m2);
        nr = newton_refine(obj, nr.tx, nr.ty, config.newton_cap, config.grad_tol);
        sigma_m2 = std::max(sigma2, residual_of(nr, n_eff));
    }

    AoaPosterior post;
    post.mode = AoaPair{nr.tx, nr.ty};
    post.newton_converged = nr.converged;

    double curv_x = -nr.eval.hess(0, 0);
    double curv_y = -nr.eval.hess(1, 1);
    if (!nr.converged && !nr.improved) {
        // Newton never left the grid point; take curvatures numerically.
        post.used_grid_fallback = true;
        curv_x = -fd_curvature(obj, nr.tx, nr.ty, 0);
        curv_y = -fd_curvature(obj, nr.tx, nr.ty, 1);
    }
    const double pi2 = std::numbers::pi * std::numbers::pi;
    post.post_x = vm_from_laplace(nr.tx, std::max(curv_x, kMinKappa * pi2));
    post.post_y = vm_from_laplace(nr.ty, std::max(curv_y, kMinKappa * pi2));
    post.alpha_hat = nr.eval.c / n_eff;
    post.residual_var = estimate_residual_var(y_m, post, layout, sigma2);
    return post;
}

AoaObjectiveEval evaluate_aoa_log_posterior(const Eigen::VectorXcd& y_m,
                                            const VonMisesMsg& prior_x,
                                            const VonMisesMsg& prior_y,
                                            const SubarrayLayout& layout, double sigma2,
                                            double theta_x, double theta_y,
                                            const AoaEstimatorConfig& config) {
    const int n = layout.count();
    if (y_m.size() != n)
        throw std::invalid_argument("evaluate_aoa_log_posterior: snapshot length mismatch");
    const double mean_power = y_m.squaredNorm() / std::max(n, 1);
    const double sigma_alpha2 = std::max(config.gain_prior_scale * mean_power, 1e-300);
    const double s2e = std::max({sigma2, 1e-12 * mean_power, 1e-300});

    ToneWorkspace ws(y_m, layout);
    Objective obj;
    obj.ws = &ws;
    obj.prior_x = prior_x;
    obj.prior_y = prior_y;
    obj.likelihood_scale = 1.0 / (s2e * (n + s2e / sigma_alpha2));

    const ObjectiveEval e = obj.eval(theta_x, theta_y);
    return AoaObjectiveEval{e.value, e.grad, e.hess};
}

VonMisesMsg extrinsic_message(const VonMisesMsg& posterior, const VonMisesMsg& prior) {
    return vm_combine(posterior, prior, VmSign::quotient);
}

double estimate_residual_var(const Eigen::VectorXcd& y_m, const AoaPosterior& fit,
                             const SubarrayLayout& layout, double sigma2) {
    const Eigen::VectorXcd a = steering_vector(layout, fit.mode);
    const double resid = (y_m - fit.alpha_hat * a).squaredNorm() / layout.count();
    return std::max(sigma2, resid);
}

} // namespace aple
