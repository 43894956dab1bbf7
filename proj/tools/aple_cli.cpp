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

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "aple/harness.hpp"
#include "aple/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitPartialFailure = 3;

struct CommonOpts {
    std::string config_path;
    std::optional<long> seed;
    std::string out_path;
    std::string estimators;
    std::optional<int> threads;
};

aple::ExperimentConfig load_config(const CommonOpts& opts) {
    aple::ExperimentConfig cfg = aple::experiment_config_from_file(opts.config_path);
    if (opts.seed) cfg.seed = static_cast<std::uint64_t>(*opts.seed);
    if (!opts.out_path.empty()) cfg.out_path = opts.out_path;
    if (opts.threads) cfg.threads = *opts.threads;
    if (!opts.estimators.empty()) {
        cfg.estimators.clear();
        std::stringstream ss(opts.estimators);
        std::string name;
        while (std::getline(ss, name, ',')) {
            const auto kind = aple::estimator_from_string(name);
            if (!kind) throw std::invalid_argument("unknown estimator '" + name + "'");
            cfg.estimators.push_back(*kind);
        }
    }
    return cfg;
}

int cmd_locate(const CommonOpts& opts) {
    const aple::ExperimentConfig cfg = load_config(opts);
    aple::ExperimentConfig single = cfg;
    single.trials = 1;
    if (single.snr_db.size() != 1) {
        std::cerr << "locate: the scene file must give exactly one snr_db value\n";
        return kExitConfigError;
    }

    const double lambda = aple::kSpeedOfLight / cfg.freq_hz;
    const double d = cfg.d_over_lambda * lambda;
    const aple::ArrayGeometry geometry = aple::build_array(cfg.n_x, cfg.n_y, d, d, lambda);
    const aple::PartitionPlan plan = aple::partition(geometry, cfg.m_x, cfg.m_y);

    const std::vector<aple::ResultRow> rows = aple::run_experiment(single);

    // Re-create the scene for the detailed APLE printout.
    bool failed = false;
    std::cout << "geometry: " << cfg.n_x << "x" << cfg.n_y << " antennas, " << plan.m_count
              << " subarrays, lambda = " << lambda << " m\n";
    for (const auto& row : rows) {
        std::cout << row.estimator << ": err = "
                  << (std::isfinite(row.err2) ? std::sqrt(row.err2) : NAN)
                  << " m, time = " << row.time_s << " s"
                  << (row.converged ? "" : " [not converged]") << "\n";
        failed = failed || !std::isfinite(row.err2);
    }

    // Detailed estimate with covariance diagonal from the fused belief.
    aple::Scene scene;
    if (cfg.p_user) {
        scene.p_user = *cfg.p_user;
    } else {
        std::cerr << "locate: the scene file must set p_u explicitly\n";
        return kExitConfigError;
    }
    const Eigen::VectorXcd h = aple::near_field_channel(geometry, scene);
    scene.noise_var = std::isinf(cfg.snr_db[0])
                          ? 0.0
                          : aple::snr_to_noise_var(h, scene.pilot, cfg.snr_db[0]);
    scene.rng_seed = aple::derive_seed(cfg.seed, 1, 0);
    const aple::Snapshot snap = aple::synthesize_snapshot(h, scene, plan);
    const aple::LocationEstimate est =
        aple::run_aple(snap, plan, geometry, scene.noise_var, cfg.aple);
    std::cout << "p_hat = [" << est.p_hat.x() << ", " << est.p_hat.y() << ", "
              << est.p_hat.z() << "] m\n";
    std::cout << "cov diag = [" << est.belief.cov(0, 0) << ", " << est.belief.cov(1, 1)
              << ", " << est.belief.cov(2, 2) << "] m^2\n";
    std::cout << "iterations = " << est.iterations_run
              << ", converged = " << (est.converged ? "yes" : "no") << "\n";
    return failed ? kExitPartialFailure : kExitOk;
}

int cmd_sweep(const CommonOpts& opts) {
    const aple::ExperimentConfig cfg = load_config(opts);
    const std::vector<aple::ResultRow> rows = aple::run_experiment(cfg);
    const std::string out = cfg.out_path.empty() ? "sweep.csv" : cfg.out_path;
    std::ofstream os(out);
    if (!os) {
        std::cerr << "sweep: cannot open output '" << out << "'\n";
        return kExitConfigError;
    }
    aple::write_csv(os, rows);
    bool failed = false;
    for (const auto& row : rows) failed = failed || !std::isfinite(row.err2);
    std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
    for (const auto& kind : cfg.estimators) {
        const std::string name = aple::to_string(kind);
        for (double snr : cfg.snr_db) {
            const auto cell = aple::filter_rows(rows, name, snr);
            std::cout << name << " @ " << snr << " dB: NMSE = " << aple::nmse_db(cell)
                      << " dB\n";
        }
    }
    return failed ? kExitPartialFailure : kExitOk;
}

int cmd_scaling(const CommonOpts& opts, const std::string& sizes_arg, int repeats) {
    const aple::ExperimentConfig cfg = load_config(opts);
    aple::ComplexityProbeConfig probe;
    probe.d_over_lambda = cfg.d_over_lambda;
    probe.freq_hz = cfg.freq_hz;
    probe.range = cfg.range;
    probe.snr_db = cfg.snr_db.empty() ? 20.0 : cfg.snr_db.front();
    probe.seed = cfg.seed;
    probe.aple = cfg.aple;
    probe.repeats = repeats;

    std::string sizes = sizes_arg.empty() ? "30:2,50:2,75:3,100:4" : sizes_arg;
    std::stringstream ss(sizes);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            std::cerr << "scaling: sizes want 'n_x:m_x' pairs, got '" << item << "'\n";
            return kExitConfigError;
        }
        probe.sizes.emplace_back(std::stoi(item.substr(0, colon)),
                                 std::stoi(item.substr(colon + 1)));
    }

    const std::vector<aple::ComplexityRow> rows = aple::complexity_probe(probe);
    std::cout << "n_b,median_seconds\n";
    for (const auto& row : rows) std::cout << row.n_b << "," << row.seconds << "\n";
    std::cout << "log-log slope = " << aple::loglog_slope(rows) << "\n";

    if (!cfg.out_path.empty()) {
        std::ofstream os(cfg.out_path);
        os << "n_b,median_seconds\n";
        for (const auto& row : rows) os << row.n_b << "," << row.seconds << "\n";
    }
    return kExitOk;
}

int cmd_plot(const std::string& in_path, const std::string& out_path,
             const std::string& mode) {
    std::ifstream is(in_path);
    if (!is) {
        std::cerr << "plot: cannot open '" << in_path << "'\n";
        return kExitConfigError;
    }
    const std::vector<aple::ResultRow> rows = aple::read_csv(is);
    if (mode == "nmse") {
        aple::write_line_plot_svg(out_path, "Localization accuracy", "SNR [dB]",
                                  "NMSE [dB]", aple::nmse_vs_snr_series(rows));
    } else if (mode == "runtime") {
        aple::write_line_plot_svg(out_path, "Runtime scaling", "antennas",
                                  "mean runtime [s]", aple::runtime_vs_size_series(rows),
                                  /*log_x=*/true);
    } else {
        std::cerr << "plot: mode must be 'nmse' or 'runtime'\n";
        return kExitConfigError;
    }
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field localization with partitioned planar arrays"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string sizes_arg;
    int repeats = 5;
    std::string plot_in, plot_out = "plot.svg", plot_mode = "nmse";

    auto add_common = [&](CLI::App* sub, bool config_required) {
        sub->add_option("--config", opts.config_path, "key=value config file")
            ->required(config_required);
        sub->add_option("--seed", opts.seed, "master seed override");
        sub->add_option("--out", opts.out_path, "output path override");
        sub->add_option("--estimators", opts.estimators, "comma list: aple,mle,omp");
        sub->add_option("--threads", opts.threads, "worker threads");
    };

    CLI::App* locate = app.add_subcommand("locate", "estimate one scene");
    add_common(locate, true);
    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep to CSV");
    add_common(sweep, true);
    CLI::App* scaling = app.add_subcommand("scaling", "runtime scaling probe");
    add_common(scaling, true);
    scaling->add_option("--sizes", sizes_arg, "comma list of n_x:m_x pairs");
    scaling->add_option("--repeats", repeats, "runs per size (median)");
    CLI::App* plot = app.add_subcommand("plot", "CSV to SVG line plot");
    plot->add_option("--in", plot_in, "input CSV")->required();
    plot->add_option("--out", plot_out, "output SVG");
    plot->add_option("--mode", plot_mode, "nmse or runtime");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints usage/help
        return e.get_exit_code() == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (locate->parsed()) return cmd_locate(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        if (scaling->parsed()) return cmd_scaling(opts, sizes_arg, repeats);
        if (plot->parsed()) return cmd_plot(plot_in, plot_out, plot_mode);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartialFailure;
    }
    return kExitOk;
}
