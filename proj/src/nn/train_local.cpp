#include "hesplit/nn/train_local.h"

#include <chrono>
#include <cmath>

namespace hesplit::nn {

float train_step(LocalModel& model, const Tensor& x, const std::vector<int>& y, float eta) {
    const Tensor logits = model.forward(x);
    const auto sl = softmax_cross_entropy(logits, y);
    if (!std::isfinite(sl.loss)) throw DivergenceError("non-finite loss");
    const Tensor grad_act = model.head().backward(sl.grad);
    sgd_step(model.head().params(), model.head().grads(), eta);
    model.client().backward(grad_act);
    model.client().adam_step(AdamConfig{eta});
    return sl.loss;
}

TrainResult train_local(LocalModel& model, const data::Dataset& train, const data::Dataset& test,
                        const TrainConfig& cfg, const LocalStepHook& hook) {
    cfg.validate();
    const data::BatchPlan plan(train.size(), cfg.batch_size, cfg.seed);
    const std::size_t batches = cfg.batches_per_epoch ? cfg.batches_per_epoch : plan.batches_per_epoch();
    if (batches == 0 || batches > plan.batches_per_epoch()) {
        throw ConfigError("batches_per_epoch", "does not fit the training set");
    }

    TrainResult result;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        const auto start = std::chrono::steady_clock::now();
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const auto batch = data::make_batch(train, plan.indices(e, b));
            loss_sum += train_step(model, batch.x, batch.y, cfg.eta);
            if (hook) hook(e, b, model);
        }
        EpochMetrics m;
        m.epoch = e;
        m.mean_loss = loss_sum / static_cast<double>(batches);
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.epochs.push_back(m);
    }
    result.test_accuracy = evaluate_local(model, test, cfg.batch_size);
    result.epochs.back().accuracy = result.test_accuracy;
    return result;
}

double evaluate_local(LocalModel& model, const data::Dataset& test, std::size_t batch_size) {
    std::vector<int> predictions;
    predictions.reserve(test.size());
    for (const auto& idx : data::eval_batches(test.size(), batch_size)) {
        for (int p : model.predict(test.gather(idx))) predictions.push_back(p);
    }
    return accuracy(predictions, test.labels);
}

}  // namespace hesplit::nn
