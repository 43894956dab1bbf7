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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "aple/harness.hpp"

using namespace aple;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.n_x = cfg.n_y = 12;
    cfg.d_over_lambda = 0.5;
    cfg.m_x = cfg.m_y = 2;
    cfg.range = 0.8;
    cfg.snr_db = {10.0, 20.0};
    cfg.trials = 3;
    cfg.seed = 5;
    cfg.estimators = {EstimatorKind::aple};
    return cfg;
}

bool rows_equal_ignoring_time(const ResultRow& a, const ResultRow& b) {
    return a.estimator == b.estimator && a.n_x == b.n_x && a.m == b.m && a.r == b.r &&
           a.snr_db == b.snr_db && a.trial == b.trial && a.err2 == b.err2 &&
           a.pnorm2 == b.pnorm2 && a.converged == b.converged;
}

} // namespace

TEST_CASE("a noiseless single-trial sweep lands far below -40 dB") {
    ExperimentConfig cfg;
    cfg.n_x = cfg.n_y = 30;
    cfg.d_over_lambda = 0.25;
    cfg.m_x = cfg.m_y = 3;
    cfg.range = 2.4;
    cfg.snr_db = {std::numeric_limits<double>::infinity()};
    cfg.trials = 1;
    cfg.estimators = {EstimatorKind::aple};
    const auto rows = run_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].converged);
    CHECK(nmse_db(rows) <= -40.0);
}

TEST_CASE("sweeps are reproducible apart from wall time") {
    const ExperimentConfig cfg = small_config();
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(rows_equal_ignoring_time(a[i], b[i]));
}

TEST_CASE("thread count does not change the results") {
    ExperimentConfig cfg = small_config();
    const auto serial = run_experiment(cfg);
    cfg.threads = 2;
    const auto parallel = run_experiment(cfg);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i)
        CHECK(rows_equal_ignoring_time(serial[i], parallel[i]));
}

TEST_CASE("rows are ordered by snr then trial and adding trials keeps old rows") {
    ExperimentConfig cfg = small_config();
    const auto few = run_experiment(cfg);
    cfg.trials = 5;
    const auto more = run_experiment(cfg);

    for (std::size_t i = 1; i < more.size(); ++i) {
        const bool snr_order = more[i - 1].snr_db < more[i].snr_db ||
                               (more[i - 1].snr_db == more[i].snr_db &&
                                more[i - 1].trial <= more[i].trial);
        CHECK(snr_order);
    }
    // Every row of the shorter run appears identically in the longer one.
    for (const auto& row : few) {
        bool found = false;
        for (const auto& big : more)
            if (big.snr_db == row.snr_db && big.trial == row.trial &&
                big.estimator == row.estimator) {
                found = rows_equal_ignoring_time(big, row);
                break;
            }
        CHECK(found);
    }
}

TEST_CASE("placement is shared across snr points of one trial") {
    const auto rows = run_experiment(small_config());
    for (const auto& a : rows)
        for (const auto& b : rows)
            if (a.trial == b.trial) CHECK(a.pnorm2 == b.pnorm2);
}

TEST_CASE("aggregation is invariant to row order") {
    auto rows = run_experiment(small_config());
    const auto cell = filter_rows(rows, "aple", 10.0);
    const double before = nmse_db(cell);
    auto shuffled = cell;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(3));
    CHECK(nmse_db(shuffled) == doctest::Approx(before).epsilon(1e-15));
    CHECK(std::isfinite(nmse_db_median(cell)));
}

TEST_CASE("csv round-trips losslessly") {
    auto rows = run_experiment(small_config());
    rows[0].err2 = std::numeric_limits<double>::quiet_NaN(); // failure row form
    rows[0].converged = false;
    std::stringstream ss;
    write_csv(ss, rows);
    const auto back = read_csv(ss);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].estimator == rows[i].estimator);
        CHECK(back[i].n_x == rows[i].n_x);
        CHECK(back[i].m == rows[i].m);
        CHECK(back[i].r == rows[i].r);
        CHECK(back[i].snr_db == rows[i].snr_db);
        CHECK(back[i].trial == rows[i].trial);
        if (std::isnan(rows[i].err2))
            CHECK(std::isnan(back[i].err2));
        else
            CHECK(back[i].err2 == rows[i].err2);
        CHECK(back[i].pnorm2 == rows[i].pnorm2);
        CHECK(back[i].time_s == rows[i].time_s);
        CHECK(back[i].converged == rows[i].converged);
    }
    std::stringstream first_line(ss.str());
    std::string header;
    std::getline(first_line, header);
    CHECK(header == kCsvHeader);
}

TEST_CASE("config text parses into a full experiment") {
    const std::string text = R"(
# reference sweep
n_x = 30
d_over_lambda = 0.25
freq_ghz = 28
m_x = 3
r = 2.0
cone_half_angle_deg = 30
snr_db = 0,5,10, 15
trials = 7
seed = 11
estimators = aple,mle
threads = 2
out = out.csv
n1 = 4
damping = 0.25
omp_budget_mb = 256
)";
    const auto cfg = experiment_config_from_text(text);
    CHECK(cfg.n_x == 30);
    CHECK(cfg.n_y == 30);
    CHECK(cfg.m_y == 3);
    CHECK(cfg.snr_db.size() == 4);
    CHECK(cfg.snr_db[3] == 15.0);
    CHECK(cfg.trials == 7);
    CHECK(cfg.estimators.size() == 2);
    CHECK(cfg.estimators[1] == EstimatorKind::mle);
    CHECK(cfg.threads == 2);
    CHECK(cfg.out_path == "out.csv");
    CHECK(cfg.aple.n1 == 4);
    CHECK(cfg.aple.damping == 0.25);
    CHECK(cfg.omp_budget_bytes == std::size_t{256} << 20);
}

TEST_CASE("bad configs are rejected with informative messages") {
    CHECK_THROWS_WITH_AS(experiment_config_from_text("bogus_key = 3"),
                         doctest::Contains("unknown key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(experiment_config_from_text("n_x = twelve"),
                         doctest::Contains("bad integer"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(experiment_config_from_text("estimators = bogus"),
                         doctest::Contains("unknown estimator"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(experiment_config_from_text("n_x 12"),
                         doctest::Contains("expected"), std::invalid_argument);
    CHECK_THROWS_AS(experiment_config_from_text("trials = 0"), std::invalid_argument);
}

TEST_CASE("explicit placement and infinite snr parse") {
    const auto cfg = experiment_config_from_text("p_u = 0.1, -0.2, 1.5\nsnr_db = inf\nn_x = 12\nm_x = 2\nd_over_lambda = 0.5");
    REQUIRE(cfg.p_user.has_value());
    CHECK(cfg.p_user->y() == -0.2);
    CHECK(std::isinf(cfg.snr_db[0]));
    const auto rows = run_experiment(cfg);
    CHECK(rows[0].err2 < 1e-6);
}

TEST_CASE("svg plots carry axes labels and one polyline per series") {
    std::vector<PlotSeries> series(2);
    series[0].label = "alpha";
    series[0].x = {0, 5, 10};
    series[0].y = {-5, -12, -22};
    series[1].label = "beta";
    series[1].x = {0, 5, 10};
    series[1].y = {-3, -9, -15};
    const std::string path = "/tmp/aple_test_plot.svg";
    write_line_plot_svg(path, "accuracy", "SNR [dB]", "NMSE [dB]", series);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string svg = ss.str();
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("SNR [dB]") != std::string::npos);
    CHECK(svg.find("NMSE [dB]") != std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);
    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1))
        ++polylines;
    CHECK(polylines == 2);
    std::remove(path.c_str());
}

TEST_CASE("series aggregation groups by estimator") {
    auto rows = run_experiment(small_config());
    const auto nmse_series = nmse_vs_snr_series(rows);
    REQUIRE(nmse_series.size() == 1);
    CHECK(nmse_series[0].label == "aple");
    CHECK(nmse_series[0].x.size() == 2);
    const auto runtime_series = runtime_vs_size_series(rows);
    REQUIRE(runtime_series.size() == 1);
    CHECK(runtime_series[0].x[0] == 144);
}
