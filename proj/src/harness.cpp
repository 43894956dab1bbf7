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

#include "aple/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "aple/parallel.hpp"
#include "aple/rng.hpp"

namespace aple {

namespace {

constexpr std::uint64_t kPlacementStream = 0;

double parse_double(const std::string& s, const std::string& key) {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number '" + s + "' for key '" + key + "'");
    }
}

long parse_int(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer '" + s + "' for key '" + key + "'");
    }
}

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> parts;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, delim)) parts.push_back(item);
    if (!s.empty() && s.back() == delim) parts.emplace_back();
    return parts;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

Eigen::Vector3d sample_cone_direction(std::mt19937_64& engine, double half_angle_rad) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // Uniform over the spherical cap around +z.
    const double cos_min = std::cos(half_angle_rad);
    const double c = cos_min + (1.0 - cos_min) * uni(engine);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double omega = 2.0 * std::numbers::pi * uni(engine) - std::numbers::pi;
    return {s * std::cos(omega), s * std::sin(omega), c};
}

/// Local search window around the true source, snapped to the absolute
/// lattice of multiples of the step sizes so the truth is generically
/// off-grid (a window centered on the truth would put it on a node).
PolarGrid local_grid(const Eigen::Vector3d& truth, double r_halfwidth, double r_step,
                     double angle_halfwidth_rad, double angle_step_rad) {
    const double r = truth.norm();
    const double phi = std::acos(std::clamp(truth.z() / r, -1.0, 1.0));
    const double omega = std::atan2(truth.y(), truth.x());
    auto snap = [](double v, double step) { return std::floor(v / step) * step; };
    const double r_lo = std::max(snap(r - r_halfwidth, r_step), r_step);
    const double phi_lo = std::max(snap(phi - angle_halfwidth_rad, angle_step_rad), 0.0);
    const double phi_hi = std::min(phi + angle_halfwidth_rad, std::numbers::pi / 2.0);
    return PolarGrid::regular(r_lo, r + r_halfwidth, r_step,
                              snap(omega - angle_halfwidth_rad, angle_step_rad),
                              omega + angle_halfwidth_rad, angle_step_rad, phi_lo,
                              std::max(phi_hi, phi_lo), angle_step_rad);
}

} // namespace

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::aple: return "aple";
        case EstimatorKind::mle: return "mle";
        case EstimatorKind::omp: return "omp";
    }
    return "?";
}

std::optional<EstimatorKind> estimator_from_string(const std::string& name) {
    if (name == "aple") return EstimatorKind::aple;
    if (name == "mle") return EstimatorKind::mle;
    if (name == "omp") return EstimatorKind::omp;
    return std::nullopt;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    if (config.trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");
    if (config.snr_db.empty())
        throw std::invalid_argument("run_experiment: empty SNR list");
    if (config.estimators.empty())
        throw std::invalid_argument("run_experiment: no estimators selected");

    const double lambda = kSpeedOfLight / config.freq_hz;
    const double d = config.d_over_lambda * lambda;
    const ArrayGeometry geometry = build_array(config.n_x, config.n_y, d, d, lambda);
    const PartitionPlan plan = partition(geometry, config.m_x, config.m_y);
    const double deg = std::numbers::pi / 180.0;

    const std::size_t per_trial = config.snr_db.size() * config.estimators.size();
    std::vector<ResultRow> rows(static_cast<std::size_t>(config.trials) * per_trial);

    parallel_for(static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t t) {
        Eigen::Vector3d p_user;
        if (config.p_user) {
            p_user = *config.p_user;
        } else {
            auto engine = make_engine(derive_seed(config.seed, kPlacementStream, t));
            p_user = config.range *
                     sample_cone_direction(engine, config.cone_half_angle_deg * deg);
        }

        Scene scene;
        scene.p_user = p_user;
        const Eigen::VectorXcd h = near_field_channel(geometry, scene);
        const double pnorm2 = p_user.squaredNorm();

        for (std::size_t si = 0; si < config.snr_db.size(); ++si) {
            const double snr = config.snr_db[si];
            scene.noise_var =
                std::isinf(snr) ? 0.0 : snr_to_noise_var(h, scene.pilot, snr);
            scene.rng_seed = derive_seed(config.seed, si + 1, t);
            const Snapshot snap = synthesize_snapshot(h, scene, plan);

            for (std::size_t ei = 0; ei < config.estimators.size(); ++ei) {
                const EstimatorKind kind = config.estimators[ei];
                ResultRow row;
                row.estimator = to_string(kind);
                row.n_x = config.n_x;
                row.m = plan.m_count;
                row.r = p_user.norm();
                row.snr_db = snr;
                row.trial = static_cast<int>(t);
                row.pnorm2 = pnorm2;
                row.converged = true;

                const auto t0 = std::chrono::steady_clock::now();
                try {
                    Eigen::Vector3d p_hat;
                    switch (kind) {
                        case EstimatorKind::aple: {
                            const LocationEstimate est =
                                run_aple(snap, plan, geometry, scene.noise_var, config.aple);
                            p_hat = est.p_hat;
                            row.converged = est.converged;
                            break;
                        }
                        case EstimatorKind::mle: {
                            const PolarGrid grid = local_grid(
                                p_user, config.mle_r_halfwidth, config.mle_r_step,
                                config.mle_angle_halfwidth_deg * deg,
                                config.mle_angle_step_deg * deg);
                            p_hat = mle_grid_oracle(snap, geometry, grid);
                            break;
                        }
                        case EstimatorKind::omp: {
                            const PolarGrid grid = local_grid(
                                p_user, config.omp_r_halfwidth, config.omp_r_step,
                                config.omp_angle_halfwidth_deg * deg,
                                config.omp_angle_step_deg * deg);
                            OmpConfig omp;
                            omp.max_dictionary_bytes = config.omp_budget_bytes;
                            p_hat = omp_polar(snap, geometry, grid, omp);
                            break;
                        }
                    }
                    row.err2 = (p_hat - p_user).squaredNorm();
                } catch (const std::exception&) {
                    row.err2 = std::numeric_limits<double>::quiet_NaN();
                    row.converged = false;
                }
                const auto t1 = std::chrono::steady_clock::now();
                row.time_s = std::chrono::duration<double>(t1 - t0).count();

                rows[t * per_trial + si * config.estimators.size() + ei] = std::move(row);
            }
        }
    });

    // Final order: (snr index, trial, estimator).
    std::vector<ResultRow> ordered;
    ordered.reserve(rows.size());
    for (std::size_t si = 0; si < config.snr_db.size(); ++si)
        for (std::size_t t = 0; t < static_cast<std::size_t>(config.trials); ++t)
            for (std::size_t ei = 0; ei < config.estimators.size(); ++ei)
                ordered.push_back(rows[t * per_trial + si * config.estimators.size() + ei]);
    return ordered;
}

double nmse_db(const std::vector<ResultRow>& rows) {
    double err = 0.0, ref = 0.0;
    std::size_t n = 0;
    for (const auto& row : rows) {
        if (!std::isfinite(row.err2)) continue;
        err += row.err2;
        ref += row.pnorm2;
        ++n;
    }
    if (n == 0 || ref <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 10.0 * std::log10(err / ref);
}

double nmse_db_median(const std::vector<ResultRow>& rows) {
    std::vector<double> err;
    double ref = 0.0;
    for (const auto& row : rows) {
        if (!std::isfinite(row.err2)) continue;
        err.push_back(row.err2);
        ref += row.pnorm2;
    }
    if (err.empty() || ref <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    ref /= static_cast<double>(err.size());
    std::sort(err.begin(), err.end());
    const std::size_t mid = err.size() / 2;
    const double med =
        err.size() % 2 ? err[mid] : 0.5 * (err[mid - 1] + err[mid]);
    return 10.0 * std::log10(med / ref);
}

std::vector<ResultRow> filter_rows(const std::vector<ResultRow>& rows,
                                   const std::string& estimator,
                                   std::optional<double> snr_db) {
    std::vector<ResultRow> out;
    for (const auto& row : rows) {
        if (row.estimator != estimator) continue;
        if (snr_db && row.snr_db != *snr_db) continue;
        out.push_back(row);
    }
    return out;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << kCsvHeader << '\n';
    os << std::setprecision(17);
    for (const auto& row : rows) {
        os << row.estimator << ',' << row.n_x << ',' << row.m << ',' << row.r << ','
           << row.snr_db << ',' << row.trial << ',' << row.err2 << ',' << row.pnorm2 << ','
           << row.time_s << ',' << (row.converged ? 1 : 0) << '\n';
    }
}

std::vector<ResultRow> read_csv(std::istream& is) {
    std::vector<ResultRow> rows;
    std::string line;
    if (!std::getline(is, line)) return rows;
    if (trim(line) != kCsvHeader)
        throw std::invalid_argument("read_csv: unexpected header '" + line + "'");
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 10)
            throw std::invalid_argument("read_csv: bad row '" + line + "'");
        ResultRow row;
        row.estimator = parts[0];
        row.n_x = static_cast<int>(parse_int(parts[1], "n_x"));
        row.m = static_cast<int>(parse_int(parts[2], "m"));
        row.r = parse_double(parts[3], "r");
        row.snr_db = parse_double(parts[4], "snr_db");
        row.trial = static_cast<int>(parse_int(parts[5], "trial"));
        row.err2 = parts[6] == "nan" || parts[6] == "-nan"
                       ? std::numeric_limits<double>::quiet_NaN()
                       : parse_double(parts[6], "err2");
        row.pnorm2 = parse_double(parts[7], "pnorm2");
        row.time_s = parse_double(parts[8], "time_s");
        row.converged = parse_int(parts[9], "converged") != 0;
        rows.push_back(std::move(row));
    }
    return rows;
}

KeyValueFile parse_key_value_text(const std::string& text) {
    KeyValueFile file;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": empty key or value");
        file.values[key] = value;
    }
    return file;
}

ExperimentConfig experiment_config_from_text(const std::string& text) {
    const KeyValueFile file = parse_key_value_text(text);
    ExperimentConfig cfg;
    bool have_ny = false, have_my = false;
    for (const auto& [key, value] : file.values) {
        if (key == "n_x") cfg.n_x = static_cast<int>(parse_int(value, key));
        else if (key == "n_y") { cfg.n_y = static_cast<int>(parse_int(value, key)); have_ny = true; }
        else if (key == "d_over_lambda") cfg.d_over_lambda = parse_double(value, key);
        else if (key == "freq_ghz") cfg.freq_hz = parse_double(value, key) * 1e9;
        else if (key == "m_x") cfg.m_x = static_cast<int>(parse_int(value, key));
        else if (key == "m_y") { cfg.m_y = static_cast<int>(parse_int(value, key)); have_my = true; }
        else if (key == "p_u") {
            const auto parts = split(value, ',');
            if (parts.size() != 3)
                throw std::invalid_argument("config: p_u wants 'x,y,z', got '" + value + "'");
            cfg.p_user = Eigen::Vector3d(parse_double(trim(parts[0]), key),
                                         parse_double(trim(parts[1]), key),
                                         parse_double(trim(parts[2]), key));
        } else if (key == "r") cfg.range = parse_double(value, key);
        else if (key == "cone_half_angle_deg") cfg.cone_half_angle_deg = parse_double(value, key);
        else if (key == "snr_db") {
            cfg.snr_db.clear();
            for (const auto& part : split(value, ','))
                cfg.snr_db.push_back(parse_double(trim(part), key));
        } else if (key == "trials") cfg.trials = static_cast<int>(parse_int(value, key));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
        else if (key == "estimators") {
            cfg.estimators.clear();
            for (const auto& part : split(value, ',')) {
                const auto kind = estimator_from_string(trim(part));
                if (!kind)
                    throw std::invalid_argument("config: unknown estimator '" + trim(part) + "'");
                cfg.estimators.push_back(*kind);
            }
        } else if (key == "threads") cfg.threads = static_cast<int>(parse_int(value, key));
        else if (key == "out") cfg.out_path = value;
        else if (key == "n1") cfg.aple.n1 = static_cast<int>(parse_int(value, key));
        else if (key == "damping") cfg.aple.damping = parse_double(value, key);
        else if (key == "mle_r_halfwidth") cfg.mle_r_halfwidth = parse_double(value, key);
        else if (key == "mle_r_step") cfg.mle_r_step = parse_double(value, key);
        else if (key == "mle_angle_halfwidth_deg") cfg.mle_angle_halfwidth_deg = parse_double(value, key);
        else if (key == "mle_angle_step_deg") cfg.mle_angle_step_deg = parse_double(value, key);
        else if (key == "omp_r_halfwidth") cfg.omp_r_halfwidth = parse_double(value, key);
        else if (key == "omp_r_step") cfg.omp_r_step = parse_double(value, key);
        else if (key == "omp_angle_halfwidth_deg") cfg.omp_angle_halfwidth_deg = parse_double(value, key);
        else if (key == "omp_angle_step_deg") cfg.omp_angle_step_deg = parse_double(value, key);
        else if (key == "omp_budget_mb")
            cfg.omp_budget_bytes = static_cast<std::size_t>(parse_double(value, key) * (1 << 20));
        else
            throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    if (!have_ny) cfg.n_y = cfg.n_x;
    if (!have_my) cfg.m_y = cfg.m_x;
    if (cfg.n_x < 1 || cfg.n_y < 1)
        throw std::invalid_argument("config: antenna counts must be >= 1");
    if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (cfg.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    return cfg;
}

ExperimentConfig experiment_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return experiment_config_from_text(ss.str());
}

// --- plotting ----------------------------------------------------------------

namespace {

struct AxisScale {
    double lo = 0.0, hi = 1.0;
    double map(double v, double px_lo, double px_hi) const {
        if (hi <= lo) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

std::vector<double> nice_ticks(double lo, double hi, int target) {
    std::vector<double> ticks;
    if (hi <= lo) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    }
    const double first = std::ceil(lo / step) * step;
    for (double v = first; v <= hi + 0.5 * step; v += step) ticks.push_back(v);
    return ticks;
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

} // namespace

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<PlotSeries>& series, bool log_x) {
    const double width = 800, height = 560;
    const double ml = 80, mr = 30, mt = 50, mb = 70;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b"};

    AxisScale xs, ys;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double xv = log_x ? std::log10(s.x[i]) : s.x[i];
            if (!std::isfinite(xv) || !std::isfinite(s.y[i])) continue;
            if (first) {
                xs.lo = xs.hi = xv;
                ys.lo = ys.hi = s.y[i];
                first = false;
            } else {
                xs.lo = std::min(xs.lo, xv);
                xs.hi = std::max(xs.hi, xv);
                ys.lo = std::min(ys.lo, s.y[i]);
                ys.hi = std::max(ys.hi, s.y[i]);
            }
        }
    }
    const double xpad = (xs.hi - xs.lo) * 0.05 + 1e-12;
    const double ypad = (ys.hi - ys.lo) * 0.05 + 1e-12;
    xs.lo -= xpad; xs.hi += xpad;
    ys.lo -= ypad; ys.hi += ypad;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_line_plot_svg: cannot open '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"18\">" << title << "</text>\n";

    // Axes box.
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr
        << "\" height=\"" << height - mt - mb
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    for (double t : nice_ticks(xs.lo, xs.hi, 6)) {
        const double px = xs.map(t, ml, width - mr);
        out << "<line x1=\"" << px << "\" y1=\"" << height - mb << "\" x2=\"" << px
            << "\" y2=\"" << height - mb + 6 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px << "\" y=\"" << height - mb + 22
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt_num(log_x ? std::pow(10.0, t) : t) << "</text>\n";
    }
    for (double t : nice_ticks(ys.lo, ys.hi, 6)) {
        const double py = ys.map(t, height - mb, mt);
        out << "<line x1=\"" << ml - 6 << "\" y1=\"" << py << "\" x2=\"" << ml << "\" y2=\""
            << py << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 10 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt_num(t) << "</text>\n";
    }
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << x_label
        << "</text>\n";
    out << "<text x=\"22\" y=\"" << height / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
        << "transform=\"rotate(-90 22 " << height / 2 << ")\">" << y_label << "</text>\n";

    int color_idx = 0;
    double legend_y = mt + 18;
    for (const auto& s : series) {
        const char* color = colors[color_idx % 6];
        std::ostringstream pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double xv = log_x ? std::log10(s.x[i]) : s.x[i];
            if (!std::isfinite(xv) || !std::isfinite(s.y[i])) continue;
            pts << xs.map(xv, ml, width - mr) << ',' << ys.map(s.y[i], height - mb, mt) << ' ';
        }
        out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<rect x=\"" << width - mr - 150 << "\" y=\"" << legend_y - 9
            << "\" width=\"18\" height=\"4\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << width - mr - 126 << "\" y=\"" << legend_y
            << "\" font-family=\"sans-serif\" font-size=\"13\">" << s.label << "</text>\n";
        legend_y += 18;
        ++color_idx;
    }
    out << "</svg>\n";
}

std::vector<PlotSeries> nmse_vs_snr_series(const std::vector<ResultRow>& rows) {
    std::map<std::string, std::map<double, std::vector<ResultRow>>> cells;
    for (const auto& row : rows) cells[row.estimator][row.snr_db].push_back(row);
    std::vector<PlotSeries> series;
    for (const auto& [estimator, by_snr] : cells) {
        PlotSeries s;
        s.label = estimator;
        for (const auto& [snr, cell] : by_snr) {
            s.x.push_back(snr);
            s.y.push_back(nmse_db(cell));
        }
        series.push_back(std::move(s));
    }
    return series;
}

std::vector<PlotSeries> runtime_vs_size_series(const std::vector<ResultRow>& rows) {
    std::map<std::string, std::map<int, std::pair<double, int>>> cells;
    for (const auto& row : rows) {
        auto& [sum, count] = cells[row.estimator][row.n_x * row.n_x];
        sum += row.time_s;
        ++count;
    }
    std::vector<PlotSeries> series;
    for (const auto& [estimator, by_size] : cells) {
        PlotSeries s;
        s.label = estimator;
        for (const auto& [n_b, acc] : by_size) {
            s.x.push_back(n_b);
            s.y.push_back(acc.first / acc.second);
        }
        series.push_back(std::move(s));
    }
    return series;
}

} // namespace aple
