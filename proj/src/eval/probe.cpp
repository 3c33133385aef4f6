#include "eval/probe.hpp"

#include <Eigen/Dense>
#include <numeric>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "synthgen/generator.hpp"

namespace linecolor::eval {

namespace {
// Outline pixels are dark ink; anything in the upper half of the range is
// interior paper (possibly carrying a small leak offset).
bool non_outline(std::uint8_t v) { return v > 128; }
}  // namespace

std::vector<ProbeSample> collect_probe_samples(const synthgen::SyntheticClip& clip,
                                               const std::vector<Sketch>& sketches,
                                               int patch) {
    if (patch < 1) throw ConfigError("patch size must be positive");
    if (static_cast<int>(sketches.size()) != clip.config.t)
        throw DataError("sketch count does not match the clip's frame count");
    for (const Sketch& s : sketches)
        if (s.h != clip.config.h || s.w != clip.config.w)
            throw DataError("sketch size does not match the clip");

    std::vector<ProbeSample> samples;
    for (size_t si = 0; si < clip.sprites.size(); ++si) {
        std::vector<Mask> interiors =
            synthgen::sprite_interior_masks(clip, static_cast<int>(si));
        bool found = false;
        for (int t = 0; t < clip.config.t && !found; ++t) {
            const Sketch& sk = sketches[static_cast<size_t>(t)];
            for (int y = 0; y + patch <= clip.config.h && !found; ++y) {
                for (int x = 0; x + patch <= clip.config.w && !found; ++x) {
                    bool ok = true;
                    for (int dy = 0; dy < patch && ok; ++dy)
                        for (int dx = 0; dx < patch; ++dx) {
                            if (interiors[t].at(y + dy, x + dx) == 0 ||
                                !non_outline(sk.at(y + dy, x + dx))) {
                                ok = false;
                                break;
                            }
                        }
                    if (!ok) continue;
                    ProbeSample sample;
                    for (int dy = 0; dy < patch; ++dy)
                        for (int dx = 0; dx < patch; ++dx)
                            sample.features.push_back(sk.at(y + dy, x + dx) / 255.0);
                    sample.color = clip.sprites[si].fill;
                    samples.push_back(std::move(sample));
                    found = true;
                }
            }
        }
    }
    return samples;
}

ProbeResult leakage_probe(const std::vector<ProbeSample>& samples, std::uint64_t seed) {
    const int n = static_cast<int>(samples.size());
    if (n < kMinProbeSamples)
        throw DataError("leakage probe needs at least " + std::to_string(kMinProbeSamples) +
                        " samples, got " + std::to_string(n));
    const int p = static_cast<int>(samples[0].features.size());
    if (p < 1) throw DataError("probe samples must have at least one feature");
    for (const ProbeSample& s : samples)
        if (static_cast<int>(s.features.size()) != p)
            throw DataError("probe samples have inconsistent feature counts");

    std::vector<int> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    const int n_test = n / 5;
    const int n_train = n - n_test;

    ProbeResult res;
    if (n_train < p + 1) {
        res.reason = "underdetermined: " + std::to_string(n_train) +
                     " training rows for " + std::to_string(p + 1) + " coefficients";
        return res;
    }

    Eigen::MatrixXd x_train(n_train, p + 1), y_train(n_train, 3);
    for (int r = 0; r < n_train; ++r) {
        const ProbeSample& s = samples[static_cast<size_t>(idx[static_cast<size_t>(r)])];
        x_train(r, 0) = 1.0;
        for (int c = 0; c < p; ++c) x_train(r, c + 1) = s.features[static_cast<size_t>(c)];
        for (int c = 0; c < 3; ++c) y_train(r, c) = s.color[static_cast<size_t>(c)];
    }
    Eigen::MatrixXd coef =
        x_train.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y_train);

    Eigen::MatrixXd x_test(n_test, p + 1), y_test(n_test, 3);
    for (int r = 0; r < n_test; ++r) {
        const ProbeSample& s =
            samples[static_cast<size_t>(idx[static_cast<size_t>(n_train + r)])];
        x_test(r, 0) = 1.0;
        for (int c = 0; c < p; ++c) x_test(r, c + 1) = s.features[static_cast<size_t>(c)];
        for (int c = 0; c < 3; ++c) y_test(r, c) = s.color[static_cast<size_t>(c)];
    }
    Eigen::MatrixXd pred = x_test * coef;
    double ss_res = (y_test - pred).squaredNorm();
    double ss_tot = (y_test.rowwise() - y_test.colwise().mean()).squaredNorm();
    if (ss_tot < 1e-12) {
        res.reason = "held-out targets have zero variance";
        return res;
    }
    res.defined = true;
    res.r2 = 1.0 - ss_res / ss_tot;
    return res;
}

}  // namespace linecolor::eval
