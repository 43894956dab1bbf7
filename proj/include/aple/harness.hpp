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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aple/aple.hpp"
#include "aple/baselines.hpp"

namespace aple {

enum class EstimatorKind { aple, mle, omp };

std::string to_string(EstimatorKind kind);
std::optional<EstimatorKind> estimator_from_string(const std::string& name);

/// Monte Carlo sweep configuration. Reproducible from (config, seed) alone.
struct ExperimentConfig {
    // Geometry
    int n_x = 30;
    int n_y = 30;
    double d_over_lambda = 0.25;
    double freq_hz = 28e9;
    int m_x = 3;
    int m_y = 3;

    // User placement: either an explicit location, or a range with the
    // direction sampled uniformly in a cone around boresight per trial.
    std::optional<Eigen::Vector3d> p_user;
    double range = 2.0;
    double cone_half_angle_deg = 30.0;

    std::vector<double> snr_db = {20.0};
    int trials = 1;
    std::uint64_t seed = 1;
    std::vector<EstimatorKind> estimators = {EstimatorKind::aple};
    int threads = 1;
    std::string out_path;

    ApleConfig aple;

    // Oracle baseline: local polar grid centered on the true source.
    double mle_r_halfwidth = 0.15;
    double mle_r_step = 0.01;
    double mle_angle_halfwidth_deg = 0.75;
    double mle_angle_step_deg = 0.05;

    // Greedy dictionary baseline: likewise local, with its own accuracies.
    double omp_r_halfwidth = 1.0;
    double omp_r_step = 0.1;
    double omp_angle_halfwidth_deg = 0.5;
    double omp_angle_step_deg = 0.02;
    std::size_t omp_budget_bytes = std::size_t{1} << 30;
};

struct ResultRow {
    std::string estimator;
    int n_x = 0;
    int m = 0;
    double r = 0.0;
    double snr_db = 0.0;
    int trial = 0;
    double err2 = 0.0;   ///< ||p_hat - p_user||^2
    double pnorm2 = 0.0; ///< ||p_user||^2
    double time_s = 0.0; ///< estimator wall time, synthesis excluded
    bool converged = false;
};

inline constexpr const char* kCsvHeader =
    "estimator,n_x,m,r,snr_db,trial,err2,pnorm2,time_s,converged";

/// Runs the sweep. Rows are ordered by (snr index, trial, estimator) and are
/// a pure function of (config, seed) except for the time_s column. Per-trial
/// estimator failures are recorded as rows with NaN error fields.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

/// 10 log10( mean(err2) / mean(pnorm2) ) over the given rows.
double nmse_db(const std::vector<ResultRow>& rows);

/// Same with the median of err2 (robust variant).
double nmse_db_median(const std::vector<ResultRow>& rows);

/// Rows matching an estimator and, optionally, one SNR cell.
std::vector<ResultRow> filter_rows(const std::vector<ResultRow>& rows,
                                   const std::string& estimator,
                                   std::optional<double> snr_db = std::nullopt);

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(std::istream& is);

// --- flat key-value config files ------------------------------------------

/// Parsed `key = value` file; '#' starts a comment. Unknown keys are errors.
struct KeyValueFile {
    std::map<std::string, std::string> values;
};

KeyValueFile parse_key_value_text(const std::string& text);

/// Builds an ExperimentConfig from a key-value file. Throws
/// std::invalid_argument with a descriptive message on bad input.
ExperimentConfig experiment_config_from_file(const std::string& path);
ExperimentConfig experiment_config_from_text(const std::string& text);

// --- plotting ---------------------------------------------------------------

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Writes a labeled line plot as a standalone SVG file.
void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<PlotSeries>& series,
                         bool log_x = false);

/// Aggregates rows to one NMSE-versus-SNR series per estimator.
std::vector<PlotSeries> nmse_vs_snr_series(const std::vector<ResultRow>& rows);

/// Aggregates rows to one mean-runtime-versus-antenna-count series per estimator.
std::vector<PlotSeries> runtime_vs_size_series(const std::vector<ResultRow>& rows);

} // namespace aple
