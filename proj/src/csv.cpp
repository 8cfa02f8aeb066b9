#include "clgsmooth/csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace clgsmooth {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

namespace {

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_double(v(i));
}

void write_header_block(std::ostream& os, const std::string& prefix, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << prefix << '_' << i;
}

std::vector<double> parse_row(const std::string& line, std::size_t expected, int lineno) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw std::invalid_argument("csv: bad number '" + cell + "' at line " +
                                        std::to_string(lineno));
        }
    }
    if (out.size() != expected)
        throw std::invalid_argument("csv: expected " + std::to_string(expected) +
                                    " columns, got " + std::to_string(out.size()) + " at line " +
                                    std::to_string(lineno));
    return out;
}

} // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "l";
    write_header_block(os, "x_lin", traj.states_lin.cols());
    write_header_block(os, "x_nonlin", traj.states_nonlin.cols());
    write_header_block(os, "y", traj.measurements.cols());
    os << '\n';
    for (Eigen::Index l = 0; l < traj.horizon(); ++l) {
        os << l;
        write_vector(os, traj.states_lin.row(l).transpose());
        write_vector(os, traj.states_nonlin.row(l).transpose());
        write_vector(os, traj.measurements.row(l).transpose());
        os << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& is, Eigen::Index d_lin, Eigen::Index d_nonlin,
                               Eigen::Index d_obs) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("csv: empty trajectory file");

    const std::size_t ncols = static_cast<std::size_t>(1 + d_lin + d_nonlin + d_obs);
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        rows.push_back(parse_row(line, ncols, lineno));
    }
    if (rows.empty()) throw std::invalid_argument("csv: trajectory file has no data rows");

    Trajectory traj;
    const Eigen::Index horizon = static_cast<Eigen::Index>(rows.size());
    traj.states_lin.resize(horizon, d_lin);
    traj.states_nonlin.resize(horizon, d_nonlin);
    traj.measurements.resize(horizon, d_obs);
    for (Eigen::Index l = 0; l < horizon; ++l) {
        const auto& r = rows[l];
        std::size_t k = 1;
        for (Eigen::Index i = 0; i < d_lin; ++i) traj.states_lin(l, i) = r[k++];
        for (Eigen::Index i = 0; i < d_nonlin; ++i) traj.states_nonlin(l, i) = r[k++];
        for (Eigen::Index i = 0; i < d_obs; ++i) traj.measurements(l, i) = r[k++];
    }
    return traj;
}

void write_smoothed_csv(std::ostream& os, const std::vector<SmoothedMarginal>& smoothed) {
    if (smoothed.empty()) return;
    const Eigen::Index dn = smoothed.front().x_nonlin_hat.size();
    const Eigen::Index dl = smoothed.front().lin_hat.dim();
    os << "l";
    write_header_block(os, "x_nonlin_hat", dn);
    write_header_block(os, "lin_mean", dl);
    write_header_block(os, "lin_var", dl);
    os << ",ess\n";
    for (const auto& m : smoothed) {
        os << m.instant;
        write_vector(os, m.x_nonlin_hat);
        write_vector(os, m.lin_hat.mean());
        write_vector(os, m.lin_hat.cov().diagonal());
        os << ',' << format_double(m.effective_sample_size()) << '\n';
    }
}

void write_filtered_csv(std::ostream& os, const std::vector<FilteredEstimate>& estimates) {
    if (estimates.empty()) return;
    os << "l";
    write_header_block(os, "x_nonlin_hat", estimates.front().x_nonlin.size());
    write_header_block(os, "lin_mean", estimates.front().x_lin.size());
    os << '\n';
    for (std::size_t l = 0; l < estimates.size(); ++l) {
        os << l;
        write_vector(os, estimates[l].x_nonlin);
        write_vector(os, estimates[l].x_lin);
        os << '\n';
    }
}

void write_history_csv(std::ostream& os, const ForwardHistory& history) {
    if (history.instants.empty()) return;
    const auto& first = history.instants.front().front();
    os << "l,j";
    write_header_block(os, "x_nonlin", first.x_nonlin.size());
    os << ",weight_mu";
    write_header_block(os, "lin_pred_mean", first.lin_pred.dim());
    write_header_block(os, "lin_pred_var", first.lin_pred.dim());
    write_header_block(os, "lin_filt_mean", first.lin_pred.dim());
    write_header_block(os, "lin_filt_var", first.lin_pred.dim());
    os << ",ancestor\n";
    for (std::size_t l = 0; l < history.instants.size(); ++l) {
        for (std::size_t j = 0; j < history.instants[l].size(); ++j) {
            const auto& p = history.instants[l][j];
            os << l << ',' << j;
            write_vector(os, p.x_nonlin);
            os << ',' << format_double(p.weight_mu);
            write_vector(os, p.lin_pred.mean());
            write_vector(os, p.lin_pred.cov().diagonal());
            write_vector(os, p.lin_filt.mean());
            write_vector(os, p.lin_filt.cov().diagonal());
            int ancestor = l < history.ancestors.size()
                               ? history.ancestors[l][j]
                               : -1; // no resampling after the last instant
            os << ',' << ancestor << '\n';
        }
    }
}

void write_erbss_csv(std::ostream& os, const ErbssResult& result) {
    if (result.trajectories.empty()) return;
    const auto& first = result.trajectories.front();
    os << "traj,l,chosen_index";
    write_header_block(os, "x_nonlin", first.nonlin_path.front().size());
    write_header_block(os, "lin_mean", first.lin_smoothed.front().dim());
    write_header_block(os, "lin_var", first.lin_smoothed.front().dim());
    os << '\n';
    for (std::size_t m = 0; m < result.trajectories.size(); ++m) {
        const auto& traj = result.trajectories[m];
        for (std::size_t l = 0; l < traj.nonlin_path.size(); ++l) {
            os << m << ',' << l << ',' << traj.chosen_indices[l];
            write_vector(os, traj.nonlin_path[l]);
            write_vector(os, traj.lin_smoothed[l].mean());
            write_vector(os, traj.lin_smoothed[l].cov().diagonal());
            os << '\n';
        }
    }
}

namespace {

void write_report_rows(std::ostream& os, const RunReport& report, const std::string& axis,
                       double value) {
    for (const auto& alg : report.algorithms) {
        os << axis << ',' << format_double(value) << ',' << algorithm_name(alg.algorithm) << ','
           << format_double(alg.rmse.lin) << ',' << format_double(alg.rmse.nonlin) << ','
           << format_double(alg.rmse_halfwidth.lin) << ','
           << format_double(alg.rmse_halfwidth.nonlin) << ','
           << format_double(alg.ctb_seconds) << ','
           << (report.config.n_runs - report.excluded_runs) << ',' << report.excluded_runs << ','
           << report.floor_activations << ',' << report.cz_floor_events << ','
           << report.config.seed << '\n';
    }
}

void write_report_header(std::ostream& os) {
    os << "axis,value,algorithm,rmse_lin,rmse_nonlin,rmse_lin_hw,rmse_nonlin_hw,"
          "ctb_seconds,runs,excluded_runs,floor_activations,cz_floor_events,seed\n";
}

} // namespace

void write_report_csv(std::ostream& os, const std::vector<SweepPoint>& points,
                      const std::string& axis_name) {
    write_report_header(os);
    for (const auto& p : points) write_report_rows(os, p.report, axis_name, p.value);
}

void write_report_csv(std::ostream& os, const RunReport& report) {
    write_report_header(os);
    write_report_rows(os, report, "none", 0.0);
}

} // namespace clgsmooth
