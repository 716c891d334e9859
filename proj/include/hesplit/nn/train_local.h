#pragma once

#include <functional>

#include "hesplit/config.h"
#include "hesplit/data/dataset.h"
#include "hesplit/metrics.h"
#include "hesplit/nn/model.h"

namespace hesplit::nn {

// Called after every optimizer step with (epoch, batch, model).
using LocalStepHook = std::function<void(std::size_t, std::size_t, const LocalModel&)>;

// One training step on a batch: Adam on the convs, plain gradient descent on
// the linear head (the same split of optimizers the two-party run uses).
// Returns the batch loss.
float train_step(LocalModel& model, const Tensor& x, const std::vector<int>& y, float eta);

// Unsplit training on `train`, then accuracy on `test`. Deterministic given cfg.seed.
TrainResult train_local(LocalModel& model, const data::Dataset& train, const data::Dataset& test,
                        const TrainConfig& cfg, const LocalStepHook& hook = {});

double evaluate_local(LocalModel& model, const data::Dataset& test, std::size_t batch_size);

}  // namespace hesplit::nn
