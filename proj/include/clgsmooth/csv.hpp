#ifndef CLGSMOOTH_CSV_HPP
#define CLGSMOOTH_CSV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "clgsmooth/clg_model.hpp"
#include "clgsmooth/erbss.hpp"
#include "clgsmooth/metrics.hpp"
#include "clgsmooth/mpf.hpp"
#include "clgsmooth/rbss.hpp"

namespace clgsmooth {

// CSV export/import. All floats are printed with 9 significant digits.

std::string format_double(double v);

/// Columns: l, x_lin_0.., x_nonlin_0.., y_0..
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is, Eigen::Index d_lin, Eigen::Index d_nonlin,
                               Eigen::Index d_obs);

/// Columns: l, x_nonlin_hat_0.., lin_mean_0.., lin_var_0.. (diagonal), ess
void write_smoothed_csv(std::ostream& os, const std::vector<SmoothedMarginal>& smoothed);

/// Filtered estimates. Columns: l, x_nonlin_hat_0.., lin_mean_0..
void write_filtered_csv(std::ostream& os, const std::vector<FilteredEstimate>& estimates);

/// Debug dump of the forward pass.
/// Columns: l, j, x_nonlin_0.., weight_mu, lin_pred_mean_0.., lin_pred_var_0..,
///          lin_filt_mean_0.., lin_filt_var_0.., ancestor
void write_history_csv(std::ostream& os, const ForwardHistory& history);

/// Columns: traj, l, chosen_index, x_nonlin_0.., lin_mean_0.., lin_var_0..
void write_erbss_csv(std::ostream& os, const ErbssResult& result);

/// One row per (sweep value, algorithm). Columns: axis, value, algorithm,
/// rmse_lin, rmse_nonlin, rmse_lin_hw, rmse_nonlin_hw, ctb_seconds, runs,
/// excluded_runs, floor_activations, cz_floor_events, seed
void write_report_csv(std::ostream& os, const std::vector<SweepPoint>& points,
                      const std::string& axis_name);
void write_report_csv(std::ostream& os, const RunReport& report);

} // namespace clgsmooth

#endif
