#pragma once

#include <string>
#include <vector>

#include "ucgan/classifier.hpp"
#include "ucgan/dataset.hpp"
#include "ucgan/eval.hpp"
#include "ucgan/gan.hpp"

namespace ucgan::io {

void write_classifier_history_csv(const std::string& path, const std::vector<clf::HistoryRow>& rows);
void write_gan_history_csv(const std::string& path, const std::vector<gan::StepLog>& rows);

// Pairs file `m_in,sample_idx,label,pred,m_out` and a summary file
// `m_in,mean_out,std_out,n` ending in a `pearson_r,<value>` footer.
void write_sweep_csvs(const std::string& pairs_path, const std::string& summary_path, const eval::SweepReport& report);

void write_edit_csv(const std::string& path, const eval::EditTrajectory& traj);

// One marker per (m_in, m_out) pair; minimal standalone SVG.
void write_sweep_svg(const std::string& path, const eval::SweepReport& report);

// 2D scatter of labeled points colored by a per-point scalar in [0,1].
void write_points_svg(const std::string& path, const std::vector<std::pair<double, double>>& pts,
                      const std::vector<double>& shade, const std::string& xlabel, const std::string& ylabel);

// Binary PGM (P5, maxval 255): samples tiled row-major with 2px separators.
void write_pgm_grid(const std::string& path, const std::vector<Tensor>& images, int64_t rows, int64_t cols);

void write_grid_annotations_csv(const std::string& path, const eval::GridResult& grid);

void write_corruption_manifest_csv(const std::string& path, const std::vector<data::CorruptionAssignment>& rows,
                                   uint64_t seed);

}  // namespace ucgan::io
