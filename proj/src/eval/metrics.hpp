#pragma once

#include <vector>

#include "core/grid.hpp"
#include "synthgen/types.hpp"

namespace linecolor::eval {

// Peak signal-to-noise ratio in dB over [0,1] videos; with a mask, only
// mask-1 pixels enter the mean squared error. Identical inputs (and anything
// above the cap) report kPsnrCap.
inline constexpr double kPsnrCap = 99.0;
double psnr(const std::vector<Image>& a, const std::vector<Image>& b,
            const std::vector<Mask>* mask = nullptr);

// Mean structural similarity over non-overlapping 8x8 windows (per channel,
// per frame); with a mask, only windows containing at least one mask-1 pixel
// are averaged. Stabilizers k1=0.01, k2=0.03 on unit dynamic range.
inline constexpr int kSsimWindow = 8;
double ssim(const std::vector<Image>& a, const std::vector<Image>& b,
            const std::vector<Mask>* mask = nullptr);

// For each sprite: mean over frames (where its pure-fill interior is visible)
// of the L2 distance between the video's mean color inside that interior and
// the sprite's ground-truth fill color.
std::vector<double> region_color_error(const std::vector<Image>& video,
                                       const synthgen::SyntheticClip& gt);

// Mean over consecutive-frame pairs of the L1 difference between the video's
// frame delta and the ground truth's, summed over channels, per pixel.
double temporal_consistency(const std::vector<Image>& video, const std::vector<Image>& gt);

}  // namespace linecolor::eval
