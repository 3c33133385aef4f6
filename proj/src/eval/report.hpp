#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "eval/probe.hpp"

namespace linecolor::eval {

struct ClipMetrics {
    std::string clip_id;
    double psnr = 0.0;
    double ssim = 0.0;
    double region_color_error = 0.0;  // mean over sprites
    double temporal_consistency = 0.0;

    bool operator==(const ClipMetrics&) const = default;
};

// Per-clip metrics plus arithmetic-mean aggregates, the masking mode they
// were computed under, the evaluation resolution, and (optionally) a
// corpus-level leakage probe result.
struct MetricReport {
    bool masked = true;
    int resolution = 64;
    std::vector<ClipMetrics> clips;
    bool has_leakage = false;
    ProbeResult leakage;

    double mean_psnr() const;
    double mean_ssim() const;
    double mean_region_color_error() const;
    double mean_temporal_consistency() const;

    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& j);
    std::string to_csv() const;
};

}  // namespace linecolor::eval
