#include "hesplit/split/engine.h"

#include <chrono>
#include <cmath>
#include <random>

#include "hesplit/ckks/cipher.h"
#include "hesplit/nn/ops.h"
#include "hesplit/nn/optim.h"

namespace hesplit::split {

namespace {

using Clock = std::chrono::steady_clock;
using wire::Tag;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

nn::Tensor expect_tensor(wire::Channel& ch, Tag tag, const nn::Shape& shape) {
    auto t = wire::payload_tensor(ch.expect(tag).payload);
    if (t.shape() != shape) {
        throw ProtocolError(std::string(wire::tag_name(tag)) + " carries shape " + nn::shape_string(t.shape()) +
                            ", expected " + nn::shape_string(shape));
    }
    return t;
}

ckks::CipherVector expect_cipher(wire::Channel& ch, Tag tag, const ckks::ContextData& ctx, std::size_t features,
                                 std::size_t slots) {
    auto cv = ckks::deserialize_cipher_vector(ch.expect(tag).payload, ctx);
    if (cv.size() != features || cv.slots() != slots) {
        throw ProtocolError(std::string(wire::tag_name(tag)) + " carries " + std::to_string(cv.size()) +
                            " ciphertexts of " + std::to_string(cv.slots()) + " slots, expected " +
                            std::to_string(features) + " of " + std::to_string(slots));
    }
    return cv;
}

void require_finite(const nn::Tensor& t, const char* what) {
    if (!t.all_finite()) throw DivergenceError(std::string(what) + " became non-finite");
}

std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

ClientEngine::ClientEngine(nn::ModelSpec spec, TrainConfig cfg, wire::Channel& channel,
                           std::optional<std::uint64_t> key_seed)
    : spec_(std::move(spec)), cfg_(std::move(cfg)), ch_(&channel), key_seed_(key_seed) {
    spec_.validate();
    cfg_.validate();
}

ClientReport ClientEngine::run(const data::Dataset& train, const data::Dataset& test, const ClientHooks& hooks) {
    auto& ch = *ch_;
    const data::BatchPlan plan(train.size(), cfg_.batch_size, cfg_.seed);
    if (cfg_.batches_per_epoch == 0) cfg_.batches_per_epoch = plan.batches_per_epoch();
    if (cfg_.batches_per_epoch == 0 || cfg_.batches_per_epoch > plan.batches_per_epoch()) {
        throw ConfigError("batches_per_epoch", "N * n exceeds the training set");
    }
    if (test.size() == 0) throw ValueError("empty test set");
    const std::size_t n = cfg_.batch_size;
    const std::size_t features = spec_.split_features();
    const std::size_t classes = spec_.classes();

    ClientReport report;
    cfg_ = wire::client_handshake(ch, cfg_);

    std::optional<ckks::PrivateContext> pri;
    std::optional<ckks::Encryptor> encryptor;
    std::optional<ckks::Decryptor> decryptor;
    if (cfg_.mode == Mode::encrypted || cfg_.encrypted_eval) {
        const std::uint64_t seed = key_seed_ ? *key_seed_ : entropy_seed();
        auto keys = ckks::keygen(cfg_.he, seed);
        wire::send_public_context(ch, keys.pub);
        encryptor.emplace(keys.pub, key_seed_ ? seed + 1 : entropy_seed());
        decryptor.emplace(keys.pri);
        pri.emplace(std::move(keys.pri));
    }
    report.setup = ch.transcript().totals();

    auto init = nn::init_params(spec_, cfg_.seed);
    layers_ = nn::build_client(spec_, std::move(init.conv));

    // Sends the split activation and returns the logits, in the given mode.
    auto round_trip = [&](const nn::Tensor& a, bool encrypted) {
        if (!encrypted) {
            ch.send(Tag::act_plain, wire::tensor_payload(a));
            return expect_tensor(ch, Tag::out_plain, {a.dim(0), classes});
        }
        ch.send(Tag::act_enc, ckks::serialize(encryptor->encrypt_columns(a)));
        const auto out = expect_cipher(ch, Tag::out_enc, pri->data(), classes, a.dim(0));
        return decryptor->decrypt_columns(out);
    };

    const bool encrypted = cfg_.mode == Mode::encrypted;
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
        const auto start = Clock::now();
        const std::size_t first_entry = ch.transcript().size();
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < cfg_.batches_per_epoch; ++b) {
            const auto batch = data::make_batch(train, plan.indices(e, b));
            const nn::Tensor a = layers_.forward(batch.x);
            if (hooks.on_activation) hooks.on_activation(e, b, a);
            const nn::Tensor logits = round_trip(a, encrypted);
            if (hooks.on_logits) hooks.on_logits(e, b, logits);
            const auto sl = nn::softmax_cross_entropy(logits, batch.y);
            if (!std::isfinite(sl.loss)) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(e) + ", batch " + std::to_string(b));
            }
            ch.send(Tag::grad_out, wire::tensor_payload(sl.grad));
            if (encrypted) ch.send(Tag::grad_w, wire::tensor_payload(nn::linear_weight_grad(sl.grad, a)));
            const auto grad_a = expect_tensor(ch, Tag::grad_act, {n, features});
            layers_.backward(grad_a);
            layers_.adam_step(nn::AdamConfig{cfg_.eta});
            for (const auto* conv : layers_.conv_layers()) {
                require_finite(conv->params().weight, "client weights");
                require_finite(conv->params().bias, "client biases");
            }
            loss_sum += sl.loss;
            if (hooks.on_step) hooks.on_step(e, b, layers_);
        }
        ch.send(Tag::epoch_end, wire::u32_payload(static_cast<std::uint32_t>(e)));
        if (wire::payload_u32(ch.expect(Tag::epoch_end).payload) != e) throw ProtocolError("server echoed the wrong epoch");

        EpochMetrics m;
        m.epoch = e;
        m.mean_loss = loss_sum / static_cast<double>(cfg_.batches_per_epoch);
        m.seconds = seconds_since(start);
        const auto bytes = ch.transcript().totals(first_entry);
        m.bytes_out = bytes.sent;
        m.bytes_in = bytes.received;
        report.result.epochs.push_back(m);
        if (hooks.on_epoch) hooks.on_epoch(m);
    }

    const auto eval_start = Clock::now();
    const std::size_t eval_entry = ch.transcript().size();
    std::vector<int> predictions;
    predictions.reserve(test.size());
    for (const auto& idx : data::eval_batches(test.size(), n)) {
        const auto logits = round_trip(layers_.forward(test.gather(idx)), cfg_.encrypted_eval);
        for (int p : nn::argmax_rows(logits)) predictions.push_back(p);
    }
    ch.send(Tag::bye, {});
    ch.expect(Tag::bye);
    report.evaluation = ch.transcript().totals(eval_entry);
    report.eval_seconds = seconds_since(eval_start);
    report.result.test_accuracy = accuracy(predictions, test.labels);
    report.result.epochs.back().accuracy = report.result.test_accuracy;
    return report;
}

ServerEngine::ServerEngine(nn::ModelSpec spec, TrainConfig cfg, wire::Channel& channel)
    : spec_(std::move(spec)), cfg_(std::move(cfg)), ch_(&channel) {
    spec_.validate();
    cfg_.validate();
}

const nn::Linear& ServerEngine::head() const {
    if (!head_) throw InvalidStateError("server head exists only once the session has started");
    return *head_;
}

ServerReport ServerEngine::run(const ServerHooks& hooks) {
    auto& ch = *ch_;
    ServerReport report;
    cfg_ = wire::server_handshake(ch, cfg_);
    std::optional<ckks::PublicContext> pub;
    if (cfg_.mode == Mode::encrypted || cfg_.encrypted_eval) pub.emplace(wire::recv_public_context(ch, cfg_));
    report.setup = ch.transcript().totals();

    head_.emplace(nn::init_params(spec_, cfg_.seed).linear);
    auto& head = *head_;
    const std::size_t n = cfg_.batch_size;
    const std::size_t features = spec_.split_features();
    const std::size_t classes = spec_.classes();
    const bool encrypted = cfg_.mode == Mode::encrypted;

    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
        const auto start = Clock::now();
        const std::size_t first_entry = ch.transcript().size();
        for (std::size_t b = 0; b < cfg_.batches_per_epoch; ++b) {
            nn::Tensor grad_a;
            if (!encrypted) {
                const auto a = expect_tensor(ch, Tag::act_plain, {n, features});
                ch.send(Tag::out_plain, wire::tensor_payload(head.forward(a)));
                const auto g = expect_tensor(ch, Tag::grad_out, {n, classes});
                grad_a = head.backward(g);
                nn::sgd_step(head.params(), head.grads(), cfg_.eta);
            } else {
                const auto in = expect_cipher(ch, Tag::act_enc, pub->data(), features, n);
                if (in.level() != pub->data().max_level()) throw ProtocolError("activation ciphertexts are not fresh");
                const auto out = ckks::encrypted_linear(pub->data(), in, head.params().weight, head.params().bias);
                ch.send(Tag::out_enc, ckks::serialize(out));
                const auto g = expect_tensor(ch, Tag::grad_out, {n, classes});
                nn::Gradients grads{expect_tensor(ch, Tag::grad_w, {classes, features}), nn::linear_bias_grad(g)};
                grad_a = nn::linear_input_grad(g, head.params().weight);
                nn::sgd_step(head.params(), grads, cfg_.eta);
            }
            require_finite(head.params().weight, "server weights");
            require_finite(head.params().bias, "server biases");
            ch.send(Tag::grad_act, wire::tensor_payload(grad_a));
            if (hooks.on_step) hooks.on_step(e, b, head);
        }
        const auto echo = wire::payload_u32(ch.expect(Tag::epoch_end).payload);
        if (echo != e) throw ProtocolError("client announced the end of epoch " + std::to_string(echo));
        ch.send(Tag::epoch_end, wire::u32_payload(echo));
        EpochMetrics m;
        m.epoch = e;
        m.seconds = seconds_since(start);
        const auto bytes = ch.transcript().totals(first_entry);
        m.bytes_out = bytes.sent;
        m.bytes_in = bytes.received;
        report.epochs.push_back(m);
    }

    const std::size_t eval_entry = ch.transcript().size();
    for (;;) {
        auto msg = ch.recv();
        if (msg.tag == Tag::bye) break;
        if (msg.tag == Tag::act_plain) {
            const auto a = wire::payload_tensor(msg.payload);
            if (a.rank() != 2 || a.dim(1) != features || a.dim(0) > n) throw ProtocolError("bad evaluation activation");
            ch.send(Tag::out_plain, wire::tensor_payload(nn::linear_forward(a, head.params().weight, head.params().bias)));
        } else {
            const auto in = ckks::deserialize_cipher_vector(msg.payload, pub->data());
            if (in.size() != features || in.slots() > n) throw ProtocolError("bad evaluation ciphertexts");
            ch.send(Tag::out_enc,
                    ckks::serialize(ckks::encrypted_linear(pub->data(), in, head.params().weight, head.params().bias)));
        }
        ++report.eval_batches;
    }
    ch.send(Tag::bye, {});
    report.evaluation = ch.transcript().totals(eval_entry);
    return report;
}

}  // namespace hesplit::split
