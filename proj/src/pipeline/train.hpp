#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/report.hpp"
#include "diffusion/model.hpp"
#include "pipeline/config.hpp"
#include "synthgen/types.hpp"

namespace linecolor::pipeline {

struct TraceRow {
    std::int64_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
    Stage stage = Stage::dense;

    bool operator==(const TraceRow&) const = default;
};

// "step,loss,lr,stage" header plus one row per optimizer step; loss printed
// at full precision so trace files compare bit-for-bit across identical runs.
std::string trace_to_csv(const std::vector<TraceRow>& trace);

struct TrainResult {
    ModelState model;
    std::vector<TraceRow> trace;
    Report report;
};

// Runs the noise-prediction training loop over the clip collection.
//   dense:  fresh model when `init` is null, else resumes the dense checkpoint.
//   sparse: `init` is required; a dense checkpoint is adapted (heatmap input
//           channel added, step counter reset), a sparse one resumes.
// Examples are rebuilt each visit so augmentation varies across steps; all
// randomness forks from cfg.seed, and the loop is single-threaded, so a rerun
// with the same inputs reproduces the trace exactly. A non-finite loss aborts
// with step diagnostics (RuntimeFailure).
TrainResult train(const std::vector<synthgen::SyntheticClip>& dataset, const TrainConfig& cfg,
                  const ModelState* init = nullptr);

}  // namespace linecolor::pipeline
