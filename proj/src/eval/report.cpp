#include "eval/report.hpp"

#include <sstream>

#include "core/errors.hpp"

namespace linecolor::eval {

namespace {
double mean_over(const std::vector<ClipMetrics>& clips, double ClipMetrics::*field) {
    if (clips.empty()) throw DataError("report holds no clips to aggregate");
    double acc = 0.0;
    for (const ClipMetrics& c : clips) acc += c.*field;
    return acc / static_cast<double>(clips.size());
}
}  // namespace

double MetricReport::mean_psnr() const { return mean_over(clips, &ClipMetrics::psnr); }
double MetricReport::mean_ssim() const { return mean_over(clips, &ClipMetrics::ssim); }
double MetricReport::mean_region_color_error() const {
    return mean_over(clips, &ClipMetrics::region_color_error);
}
double MetricReport::mean_temporal_consistency() const {
    return mean_over(clips, &ClipMetrics::temporal_consistency);
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["masked"] = masked;
    j["resolution"] = resolution;
    j["clips"] = nlohmann::json::array();
    for (const ClipMetrics& c : clips) {
        j["clips"].push_back({{"clip_id", c.clip_id},
                              {"psnr", c.psnr},
                              {"ssim", c.ssim},
                              {"region_color_error", c.region_color_error},
                              {"temporal_consistency", c.temporal_consistency}});
    }
    if (!clips.empty()) {
        j["aggregate"] = {{"psnr", mean_psnr()},
                          {"ssim", mean_ssim()},
                          {"region_color_error", mean_region_color_error()},
                          {"temporal_consistency", mean_temporal_consistency()}};
    }
    if (has_leakage) {
        if (leakage.defined)
            j["leakage_probe_r2"] = leakage.r2;
        else
            j["leakage_probe_r2"] = nullptr;
        j["leakage_note"] = leakage.reason;
    }
    return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
    MetricReport r;
    try {
        r.masked = j.at("masked").get<bool>();
        r.resolution = j.at("resolution").get<int>();
        for (const nlohmann::json& c : j.at("clips")) {
            ClipMetrics m;
            m.clip_id = c.at("clip_id").get<std::string>();
            m.psnr = c.at("psnr").get<double>();
            m.ssim = c.at("ssim").get<double>();
            m.region_color_error = c.at("region_color_error").get<double>();
            m.temporal_consistency = c.at("temporal_consistency").get<double>();
            r.clips.push_back(std::move(m));
        }
        if (j.contains("leakage_probe_r2")) {
            r.has_leakage = true;
            if (j.at("leakage_probe_r2").is_null()) {
                r.leakage.defined = false;
                r.leakage.reason = j.value("leakage_note", std::string{});
            } else {
                r.leakage.defined = true;
                r.leakage.r2 = j.at("leakage_probe_r2").get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string{"malformed metric report: "} + e.what());
    }
    return r;
}

std::string MetricReport::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "clip_id,psnr,ssim,region_color_error,temporal_consistency\n";
    for (const ClipMetrics& c : clips)
        out << c.clip_id << ',' << c.psnr << ',' << c.ssim << ',' << c.region_color_error
            << ',' << c.temporal_consistency << '\n';
    if (!clips.empty())
        out << "mean," << mean_psnr() << ',' << mean_ssim() << ','
            << mean_region_color_error() << ',' << mean_temporal_consistency() << '\n';
    return out.str();
}

}  // namespace linecolor::eval
