#pragma once

#include "babc/harness.hpp"

#include <string>

namespace babc {

/// Writes manifest.json, dataset.csv, tv_trace.csv, batch_log.csv, posterior_samples.csv,
/// timing.csv and (if present) uq_summary.json into dir. Everything except timing.csv is a
/// deterministic function of the record.
void write_run(const RunRecord& record, const std::string& dir);

/// tv_summary.csv (iteration,median,q05,q95), final_tv.csv and one subdirectory per run.
void write_repeat(const RepeatSummary& summary, const std::string& dir, bool write_runs = true);

/// Grid truth: truth_grid.csv (coords..., probability). Sample truth: truth_samples.csv.
void write_truth(const GroundTruth& truth, const std::string& dir);

/// CSV with a header row and one sample per line.
void write_samples_csv(const std::string& path, const PointSet& samples);
PointSet read_samples_csv(const std::string& path);

/// JSON text of the UQ checkpoints.
std::string uq_to_json_text(const std::vector<UqCheckpoint>& checkpoints);

}  // namespace babc
