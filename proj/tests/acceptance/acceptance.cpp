// Acceptance suite: one PASS/FAIL line per criterion. With no arguments all
// criteria run; otherwise only the numbers given.
//
// HESPLIT_DATA_DIR points criterion 2 at a converted heartbeat dataset
// (train.csv, test.csv); without it the synthetic data is used.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "../gradcheck.h"
#include "../privacy_scan.h"
#include "hesplit/ckks/cipher.h"
#include "hesplit/ckks/context.h"
#include "hesplit/nn/train_local.h"
#include "hesplit/split/engine.h"

using namespace hesplit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const data::DataSplits& synth_full() {
    static const auto d = data::load_data("synth:13245:1");
    return d;
}

ckks::Params set_8192() { return {8192, {60, 40, 40, 60}, 40}; }
ckks::Params set_4096() { return {4096, {40, 20, 20}, 21}; }
ckks::Params set_2048() { return {2048, {18, 18, 18}, 16}; }

TrainConfig encrypted(TrainConfig cfg, ckks::Params he) {
    cfg.mode = Mode::encrypted;
    cfg.encrypted_eval = true;
    cfg.he = std::move(he);
    return cfg;
}

// ---------------------------------------------------------------------------

Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    struct Row {
        const char* name;
        gradcheck::Result r;
    };
    const std::vector<Row> rows = {
        {"conv1d", gradcheck::check_conv(40, 101)},
        {"leaky_relu", gradcheck::check_leaky_relu(25, 102)},
        {"maxpool1d", gradcheck::check_maxpool(25, 103)},
        {"linear", gradcheck::check_linear(25, 104)},
        {"softmax_ce", gradcheck::check_softmax_ce(25, 105)},
    };
    const double secs = seconds_since(t0);
    bool pass = secs < 60.0;
    std::string detail;
    for (const auto& row : rows) {
        pass = pass && row.r.cases >= 20 && row.r.worst <= 1e-3;
        detail += fmt("%s %d cases worst %.1e; ", row.name, row.r.cases, row.r.worst);
    }
    return {pass, detail + fmt("%.1fs", secs)};
}

Outcome local_baseline() {
    const char* dir = std::getenv("HESPLIT_DATA_DIR");
    const bool real = dir && *dir;
    const auto d = real ? data::load_mitbih(dir) : synth_full();
    TrainConfig cfg;  // eta 0.001, n = 4, 10 epochs
    const auto spec = nn::m1_spec();
    nn::LocalModel model(spec, nn::init_params(spec, cfg.seed));
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = nn::train_local(model, d.train, d.test, cfg);
    const double acc = r.test_accuracy;
    const bool pass = real ? std::abs(acc - 0.8806) <= 0.03 : acc >= 0.90;
    return {pass, fmt("%s data, %zu train / %zu test, %zu epochs: accuracy %.4f (needs %s), %.0fs",
                      real ? "heartbeat" : "synthetic", d.train.size(), d.test.size(), cfg.epochs, acc,
                      real ? "0.8806 +- 0.03" : ">= 0.90", seconds_since(t0))};
}

bool bits_equal(const nn::Tensor& a, const nn::Tensor& b) {
    return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

Outcome split_parity() {
    const auto& full = synth_full();
    const auto train = full.train.head(240), test = full.test.head(200);
    const auto spec = nn::m1_spec();
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 5;

    std::vector<nn::ModelParams> local_steps;
    nn::LocalModel local(spec, nn::init_params(spec, cfg.seed));
    const auto lr = nn::train_local(local, train, test, cfg, [&](std::size_t, std::size_t, const nn::LocalModel& m) {
        local_steps.push_back(m.params());
    });

    std::vector<std::vector<nn::LayerParams>> client_steps;
    std::vector<nn::LayerParams> server_steps;
    split::LoopbackOptions opt;
    opt.client_hooks.on_step = [&](std::size_t, std::size_t, const nn::Sequential& s) {
        std::vector<nn::LayerParams> p;
        for (const auto* c : s.conv_layers()) p.push_back(c->params());
        client_steps.push_back(std::move(p));
    };
    opt.server_hooks.on_step = [&](std::size_t, std::size_t, const nn::Linear& h) { server_steps.push_back(h.params()); };
    const auto sr = split::run_loopback(spec, cfg, train, test, opt);

    std::size_t identical = 0;
    const std::size_t steps = local_steps.size();
    if (client_steps.size() == steps && server_steps.size() == steps) {
        for (std::size_t s = 0; s < steps; ++s) {
            bool same = bits_equal(local_steps[s].linear.weight, server_steps[s].weight) &&
                        bits_equal(local_steps[s].linear.bias, server_steps[s].bias);
            for (std::size_t l = 0; l < local_steps[s].conv.size(); ++l) {
                same = same && bits_equal(local_steps[s].conv[l].weight, client_steps[s][l].weight) &&
                       bits_equal(local_steps[s].conv[l].bias, client_steps[s][l].bias);
            }
            identical += same;
        }
    }
    const bool pass = steps >= 50 && identical == steps && lr.test_accuracy == sr.client.result.test_accuracy;
    return {pass, fmt("%zu/%zu optimizer steps bit-identical; accuracy local %.4f split %.4f", identical, steps,
                      lr.test_accuracy, sr.client.result.test_accuracy)};
}

// Worst |decrypt(encrypted_linear) - a w^T - b| over `trials` random batches,
// against a binary64 evaluation.
double linear_fidelity(const ckks::Params& params, int trials, std::uint64_t seed) {
    const auto keys = ckks::keygen(params, seed);
    ckks::Encryptor enc(keys.pub, seed + 1);
    const ckks::Decryptor dec(keys.pri);
    std::mt19937_64 gen(seed + 2);
    std::uniform_real_distribution<float> unit(-1.0f, 1.0f), small(-0.1f, 0.1f);
    double worst = 0;
    for (int t = 0; t < trials; ++t) {
        nn::Tensor a({4, 256}), w({5, 256}), b({5});
        for (auto& v : a.data()) v = unit(gen);
        for (auto& v : w.data()) v = small(gen);
        for (auto& v : b.data()) v = small(gen);
        const auto z = dec.decrypt_columns(ckks::encrypted_linear(keys.pub.data(), enc.encrypt_columns(a), w, b));
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t j = 0; j < 5; ++j) {
                double ref = b[j];
                for (std::size_t i = 0; i < 256; ++i) ref += static_cast<double>(a.at(r, i)) * w.at(j, i);
                worst = std::max(worst, std::abs(ref - z.at(r, j)));
            }
        }
    }
    return worst;
}

Outcome encrypted_linear_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    const double big = linear_fidelity(set_8192(), 100, 41);
    const double mid = linear_fidelity(set_4096(), 100, 42);
    const double secs = seconds_since(t0);
    return {big <= 1e-3 && mid <= 1e-2 && secs < 300,
            fmt("100 batches each: 8192 set max err %.2e (<= 1e-3), 4096 set max err %.2e (<= 1e-2), %.0fs", big, mid,
                secs)};
}

struct SubsetRun {
    double plain = 0, enc = 0, secs = 0;
};

SubsetRun subset_training(const ckks::Params& he) {
    const auto& full = synth_full();
    const auto train = full.train.head(512), test = full.test.head(512);
    TrainConfig cfg;
    cfg.epochs = 2;
    SubsetRun r;
    r.plain = split::run_loopback(nn::m1_spec(), cfg, train, test).client.result.test_accuracy;
    const auto t0 = std::chrono::steady_clock::now();
    split::LoopbackOptions opt;
    opt.key_seed = 77;
    r.enc = split::run_loopback(nn::m1_spec(), encrypted(cfg, he), train, test, opt).client.result.test_accuracy;
    r.secs = seconds_since(t0);
    return r;
}

Outcome encrypted_training() {
    const auto r = subset_training(set_4096());
    return {std::abs(r.enc - r.plain) <= 0.03,
            fmt("512 samples, 2 epochs: plain %.4f, encrypted (4096 set) %.4f, gap %.2f points (<= 3), %.0fs", r.plain,
                r.enc, 100 * std::abs(r.enc - r.plain), r.secs)};
}

double encode_error(const ckks::Params& p) {
    const auto keys = ckks::keygen(p, 9);
    const auto& ctx = keys.pub.data();
    std::mt19937_64 gen(10);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> v(ctx.encoder().slots());
    for (auto& x : v) x = unit(gen);
    const auto back = ckks::decode(ctx, ckks::encode(ctx, v, ctx.scale(), ctx.max_level()), v.size());
    double worst = 0;
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(back[i] - v[i]));
    return worst;
}

Outcome degradation() {
    const double small = encode_error(set_2048()), mid = encode_error(set_4096());
    const auto r = subset_training(set_2048());
    // Chance is 0.2 for five balanced classes.
    const bool collapsed = r.enc <= 0.35;
    return {small >= 10 * mid && collapsed,
            fmt("encode error 2048 set %.2e vs 4096 set %.2e (ratio %.1f, needs >= 10); 512 samples, 2 epochs: "
                "encrypted (2048 set) %.4f vs plain %.4f (needs <= 0.35), %.0fs",
                small, mid, small / mid, r.enc, r.plain, r.secs)};
}

bool shares_window(const Bytes& hay, const Bytes& needle, std::size_t w) {
    std::unordered_set<std::string_view> windows;
    const auto* nd = reinterpret_cast<const char*>(needle.data());
    for (std::size_t i = 0; i + w <= needle.size(); ++i) windows.emplace(nd + i, w);
    const auto* hd = reinterpret_cast<const char*>(hay.data());
    for (std::size_t i = 0; i + w <= hay.size(); ++i) {
        if (windows.count(std::string_view(hd + i, w))) return true;
    }
    return false;
}

Outcome privacy_properties() {
    std::string detail;
    bool pass = true;
    for (const auto& p : {set_2048(), set_4096(), set_8192()}) {
        const auto keys = ckks::keygen(p, 3);
        const auto sk = keys.pri.serialize_secret_key();
        const bool found_in_private = shares_window(keys.pri.serialize(), sk, 32);
        const bool found_in_public = shares_window(keys.pub.serialize(), sk, 32);
        pass = pass && found_in_private && !found_in_public;
        detail += fmt("N=%zu public context %s; ", p.poly_degree, found_in_public ? "LEAKS sk" : "clean");
    }

    const auto& full = synth_full();
    const auto train = full.train.head(40), test = full.test.head(8);
    const std::set<std::string> allowed_encrypted = {"HELLO",    "SYNC",   "CTX_PUB",   "ACT_ENC",
                                                     "GRAD_OUT", "GRAD_W", "EPOCH_END", "BYE"};
    for (const auto mode : {Mode::plain, Mode::encrypted}) {
        TrainConfig cfg;
        cfg.epochs = 1;
        cfg.batches_per_epoch = 4;
        if (mode == Mode::encrypted) cfg = encrypted(cfg, set_4096());
        privacy::Scanner scanner;
        scanner.add_samples(train);
        scanner.add_samples(test);
        const data::BatchPlan plan(train.size(), cfg.batch_size, cfg.seed);
        for (std::size_t b = 0; b < cfg.batches_per_epoch; ++b) scanner.add_labels(train.gather_labels(plan.indices(0, b)));
        for (const auto& idx : data::eval_batches(test.size(), cfg.batch_size)) scanner.add_labels(test.gather_labels(idx));

        std::mutex mu;
        std::vector<Bytes> sent;
        std::set<std::string> tags;
        split::LoopbackOptions opt;
        opt.key_seed = 5;
        opt.client_hooks.on_activation = [&](std::size_t, std::size_t, const nn::Tensor& a) {
            std::lock_guard lock(mu);
            scanner.add_activation(a);
        };
        opt.observer = [&](wire::Direction d, wire::Tag t, std::span<const std::uint8_t> f) {
            if (d != wire::Direction::sent) return;
            std::lock_guard lock(mu);
            tags.insert(wire::tag_name(t));
            sent.emplace_back(f.begin(), f.end());
        };
        split::run_loopback(nn::m1_spec(), cfg, train, test, opt);

        const bool enc = mode == Mode::encrypted;
        std::size_t leaks = 0;
        std::string first;
        for (const auto& f : sent) {
            if (auto hit = scanner.scan(f, enc)) {
                if (!leaks) first = *hit;
                ++leaks;
            }
        }
        bool inventory = true;
        if (enc) {
            for (const auto& t : tags) inventory = inventory && allowed_encrypted.count(t);
        }
        pass = pass && leaks == 0 && inventory && scanner.activation_count() > 0;
        detail += fmt("%s: %zu client frames, %zu leaks%s%s; ", mode_name(mode), sent.size(), leaks,
                      leaks ? (" (" + first + ")").c_str() : "",
                      enc ? (inventory ? ", tags limited to ciphertexts and gradients" : ", UNEXPECTED tag") : "");
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

// Per-epoch totals rebuilt from the transcript: everything between the
// handshake and each received EPOCH_END.
std::vector<wire::ByteTotals> epoch_bytes_from(const std::vector<wire::TranscriptEntry>& entries) {
    std::vector<wire::ByteTotals> out;
    wire::ByteTotals cur;
    for (const auto& e : entries) {
        const auto t = e.tag;
        if (t == wire::Tag::hello || t == wire::Tag::sync || t == wire::Tag::ctx_pub) continue;
        if (t == wire::Tag::bye) break;
        (e.direction == wire::Direction::sent ? cur.sent : cur.received) += e.bytes;
        if (t == wire::Tag::epoch_end && e.direction == wire::Direction::received) {
            out.push_back(cur);
            cur = {};
        }
    }
    return out;
}

bool accounting_matches(const split::LoopbackResult& r) {
    const auto& epochs = r.client.result.epochs;
    const auto rebuilt = epoch_bytes_from(r.client_transcript);
    if (rebuilt.size() != epochs.size()) return false;
    wire::ByteTotals sum = r.client.setup;
    for (std::size_t e = 0; e < epochs.size(); ++e) {
        if (rebuilt[e].sent != epochs[e].bytes_out || rebuilt[e].received != epochs[e].bytes_in) return false;
        sum.sent += epochs[e].bytes_out;
        sum.received += epochs[e].bytes_in;
    }
    sum.sent += r.client.evaluation.sent;
    sum.received += r.client.evaluation.received;
    const auto total = wire::sum_bytes(r.client_transcript);
    return total.sent == sum.sent && total.received == sum.received;
}

Outcome accounting() {
    const auto& full = synth_full();
    TrainConfig cfg;
    cfg.epochs = 1;
    const auto plain = split::run_loopback(nn::m1_spec(), cfg, full.train, full.test);
    const bool plain_ok = accounting_matches(plain);

    auto small = encrypted(cfg, set_2048());
    small.epochs = 2;
    small.batches_per_epoch = 3;
    split::LoopbackOptions opt;
    opt.key_seed = 6;
    const bool enc_ok = accounting_matches(
        split::run_loopback(nn::m1_spec(), small, full.train.head(40), full.test.head(8), opt));

    const auto& e = plain.client.result.epochs[0];
    const double mb = static_cast<double>(e.bytes_out + e.bytes_in) / 1e6;
    const double ref = 33.06;
    const bool within = mb >= ref / 2 && mb <= ref * 2;
    return {plain_ok && enc_ok && within,
            fmt("per-epoch bytes equal transcript sums: plain %s, encrypted %s; plaintext epoch of %zu batches "
                "moves %.2f MB (out %.2f, in %.2f), reference 33.06 MB, ratio %.2f",
                plain_ok ? "yes" : "NO", enc_ok ? "yes" : "NO", full.train.size() / cfg.batch_size,
                mb, e.bytes_out / 1e6, e.bytes_in / 1e6, mb / ref)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"gradient suite", gradients},
        {"local baseline", local_baseline},
        {"split parity", split_parity},
        {"encrypted linear fidelity", encrypted_linear_fidelity},
        {"encrypted training", encrypted_training},
        {"small-parameter degradation", degradation},
        {"privacy", privacy_properties},
        {"accounting", accounting},
    };
    std::set<std::size_t> wanted;
    for (int i = 1; i < argc; ++i) {
        const auto n = static_cast<std::size_t>(std::atoi(argv[i]));
        if (n < 1 || n > criteria.size()) {
            std::fprintf(stderr, "usage: %s [criterion 1-%zu ...]\n", argv[0], criteria.size());
            return 2;
        }
        wanted.insert(n);
    }
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!wanted.empty() && !wanted.count(i + 1)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %zu %s: %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
