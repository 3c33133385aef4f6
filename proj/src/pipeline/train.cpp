#include "pipeline/train.hpp"

#include <cstdio>
#include <utility>

#include "core/errors.hpp"
#include "diffusion/optimizer.hpp"
#include "diffusion/schedule.hpp"
#include "pipeline/example.hpp"

namespace linecolor::pipeline {

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::string out = "step,loss,lr,stage\n";
    char buf[128];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%s\n", static_cast<long long>(r.step),
                      r.loss, r.lr, to_string(r.stage).c_str());
        out += buf;
    }
    return out;
}

namespace {

ModelState starting_state(const TrainConfig& cfg, const ModelState* init) {
    if (cfg.stage == Stage::sparse) {
        if (!init)
            throw ConfigError("sparse-stage training requires a dense-stage checkpoint to start from");
        if (!(init->config == cfg.model))
            throw ConfigError("checkpoint architecture differs from the configured model");
        if (init->stage == Stage::dense) return adapt_dense_to_sparse(*init);
        return *init;  // resume an already-adapted sparse checkpoint
    }
    if (init) {
        if (init->stage != Stage::dense)
            throw ConfigError("dense-stage training cannot resume from a sparse checkpoint");
        if (!(init->config == cfg.model))
            throw ConfigError("checkpoint architecture differs from the configured model");
        return *init;
    }
    return init_model(cfg.model, Stage::dense, cfg.seed);
}

}  // namespace

TrainResult train(const std::vector<synthgen::SyntheticClip>& dataset, const TrainConfig& cfg,
                  const ModelState* init) {
    cfg.validate();
    if (dataset.empty()) throw DataError("training dataset is empty");

    TrainResult result;
    result.model = starting_state(cfg, init);

    // One conditioning dry run per clip: clips without any matched keypoints
    // are excluded up front (reported once) instead of being redrawn per step.
    Rng master(cfg.seed);
    std::vector<int> usable;
    for (int i = 0; i < static_cast<int>(dataset.size()); ++i) {
        Rng probe = master.fork("usability").fork(static_cast<std::uint64_t>(i));
        if (make_example(dataset[static_cast<size_t>(i)], cfg, probe, &result.report).has_value())
            usable.push_back(i);
    }
    if (usable.empty())
        throw DataError("no clip in the dataset yields a conditioned example (no keypoints anywhere)");

    DiffusionSchedule schedule = make_schedule(cfg.diffusion.schedule, cfg.diffusion.train_timesteps);
    Rng data_rng = master.fork("data");
    Rng noise_rng = master.fork("noise");
    Rng example_rng = master.fork("example");

    AdamW opt;
    opt.cfg.lr = cfg.learning_rate;
    opt.step_count = result.model.step;

    result.trace.reserve(static_cast<size_t>(cfg.total_steps));
    for (int step = 0; step < cfg.total_steps; ++step) {
        result.model.params.zero_grads();
        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const int idx = usable[static_cast<size_t>(data_rng.uniform_int(static_cast<int>(usable.size())))];
            Rng ex_rng = example_rng.fork(static_cast<std::uint64_t>(step) * cfg.batch_size + b);
            auto ex = make_example(dataset[static_cast<size_t>(idx)], cfg, ex_rng, nullptr);
            if (!ex)
                throw RuntimeFailure("clip seed " + std::to_string(dataset[static_cast<size_t>(idx)].seed) +
                                     " stopped yielding examples mid-run");
            const int t_step = 1 + noise_rng.uniform_int(schedule.n_steps);
            Tensor eps = randn_tensor(ex->z0.t, ex->z0.c, ex->z0.h, ex->z0.w, noise_rng);
            Tensor z_t = forward_diffuse(ex->z0, eps, schedule.at(t_step));
            try {
                loss_sum += loss_and_grads(result.model, z_t, t_step, eps, ex->reference_tensor(),
                                           ex->control_tensor());
            } catch (const RuntimeFailure& e) {
                throw RuntimeFailure("training diverged at step " + std::to_string(step + 1) + ": " +
                                     e.what());
            }
        }
        if (cfg.batch_size > 1) {
            const double inv = 1.0 / cfg.batch_size;
            for (auto& [name, p] : result.model.params.entries) {
                (void)name;
                for (double& g : p.grad.v) g *= inv;
            }
        }
        opt.step(result.model.params);
        result.model.step += 1;
        result.trace.push_back(
            {result.model.step, loss_sum / cfg.batch_size, cfg.learning_rate, cfg.stage});
    }

    result.report.add("trained " + std::to_string(cfg.total_steps) + " steps on " +
                      std::to_string(usable.size()) + " of " + std::to_string(dataset.size()) +
                      " clips (" + to_string(cfg.stage) + " stage)");
    return result;
}

}  // namespace linecolor::pipeline
