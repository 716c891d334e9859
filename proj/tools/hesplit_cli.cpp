// hesplit: local and split training, evaluation, benchmarking and
// activation dumps for the M1 heartbeat classifier.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hesplit/config.h"
#include "hesplit/data/dataset.h"
#include "hesplit/error.h"
#include "hesplit/metrics.h"
#include "hesplit/nn/model.h"
#include "hesplit/nn/train_local.h"
#include "hesplit/split/engine.h"
#include "hesplit/wire/channel.h"
#include "hesplit/wire/transport.h"

namespace fs = std::filesystem;
using namespace hesplit;

namespace {

enum Exit : int {
    ok = 0,
    failure = 1,
    usage = 2,
    transport = 3,
    divergence = 4,
    protocol = 5,
};

struct Globals {
    std::string config;
    std::string data = "synth:13245:1";
    std::string out = ".";
    std::optional<std::string> mode;
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
    std::size_t train_limit = 0;
    std::size_t test_limit = 0;
};

TrainConfig resolve_config(const Globals& g) {
    TrainConfig cfg = g.config.empty() ? TrainConfig{} : load_config(g.config);
    if (g.mode) {
        if (*g.mode == "plain") {
            cfg.mode = Mode::plain;
            cfg.encrypted_eval = false;
        } else if (*g.mode == "encrypted") {
            cfg.mode = Mode::encrypted;
            cfg.encrypted_eval = true;
        } else {
            throw ConfigError("mode", "expected plain or encrypted, got '" + *g.mode + "'");
        }
    }
    if (g.epochs) cfg.epochs = *g.epochs;
    if (g.seed) cfg.seed = *g.seed;
    cfg.validate();
    return cfg;
}

data::DataSplits resolve_data(const Globals& g) {
    auto d = data::load_data(g.data);
    if (g.train_limit > 0 && g.train_limit < d.train.size()) d.train = d.train.head(g.train_limit);
    if (g.test_limit > 0 && g.test_limit < d.test.size()) d.test = d.test.head(g.test_limit);
    return d;
}

fs::path out_file(const Globals& g, const std::string& name) {
    fs::create_directories(g.out);
    return fs::path(g.out) / name;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw Error("cannot write " + p.string());
    return f;
}

void write_metrics(const Globals& g, const std::string& name, const std::vector<EpochMetrics>& rows) {
    auto f = open_out(out_file(g, name));
    write_metrics_csv(f, rows);
}

void write_transcript(const Globals& g, const std::string& name, const std::vector<wire::TranscriptEntry>& e) {
    auto f = open_out(out_file(g, name));
    wire::write_transcript_csv(f, e);
}

std::vector<nn::LayerParams> all_layers(const nn::ModelParams& p) {
    auto layers = p.conv;
    layers.push_back(p.linear);
    return layers;
}

void print_epochs(const std::vector<EpochMetrics>& rows) {
    for (const auto& r : rows) {
        std::printf("epoch %zu  loss %.5f  %.2fs  out %llu B  in %llu B\n", r.epoch, r.mean_loss, r.seconds,
                    static_cast<unsigned long long>(r.bytes_out), static_cast<unsigned long long>(r.bytes_in));
    }
}

void warn_security(const TrainConfig& cfg) {
    if (cfg.mode == Mode::encrypted && cfg.he.below_standard_security()) {
        std::fprintf(stderr, "warning: %s is below 128-bit security\n", cfg.he.describe().c_str());
    }
}

int cmd_train_local(const Globals& g) {
    const auto cfg = resolve_config(g);
    const auto d = resolve_data(g);
    const auto spec = nn::m1_spec();
    nn::LocalModel model(spec, nn::init_params(spec, cfg.seed));
    const auto result = nn::train_local(model, d.train, d.test, cfg);
    print_epochs(result.epochs);
    write_metrics(g, "metrics.csv", result.epochs);
    nn::save_checkpoint(out_file(g, "model.sfhe").string(), all_layers(model.params()));
    std::printf("accuracy %.4f\n", result.test_accuracy);
    return ok;
}

int cmd_train_split(const Globals& g, std::optional<std::uint64_t> key_seed) {
    const auto cfg = resolve_config(g);
    warn_security(cfg);
    const auto d = resolve_data(g);
    split::LoopbackOptions opts;
    opts.key_seed = key_seed;
    const auto r = split::run_loopback(nn::m1_spec(), cfg, d.train, d.test, opts);
    print_epochs(r.client.result.epochs);
    write_metrics(g, "metrics.csv", r.client.result.epochs);
    write_transcript(g, "transcript.csv", r.client_transcript);
    nn::save_checkpoint(out_file(g, "model.sfhe").string(), all_layers(r.params));
    std::printf("setup out %llu B in %llu B; eval out %llu B in %llu B\n",
                static_cast<unsigned long long>(r.client.setup.sent),
                static_cast<unsigned long long>(r.client.setup.received),
                static_cast<unsigned long long>(r.client.evaluation.sent),
                static_cast<unsigned long long>(r.client.evaluation.received));
    std::printf("accuracy %.4f\n", r.client.result.test_accuracy);
    return ok;
}

int cmd_server(const Globals& g, const std::string& listen) {
    auto cfg = resolve_config(g);
    cfg.batches_per_epoch = 0;
    wire::TcpListener listener(wire::parse_endpoint(listen));
    std::printf("listening on port %u\n", static_cast<unsigned>(listener.port()));
    std::fflush(stdout);
    wire::Channel ch(listener.accept(), wire::Party::server);
    split::ServerEngine server(nn::m1_spec(), cfg, ch);
    const auto report = server.run();
    ch.close();
    write_metrics(g, "server_metrics.csv", report.epochs);
    write_transcript(g, "server_transcript.csv", ch.transcript().entries());
    nn::save_checkpoint(out_file(g, "head.sfhe").string(), {server.head().params()});
    std::printf("served %zu epochs, %zu eval batches\n", report.epochs.size(), report.eval_batches);
    return ok;
}

int cmd_client(const Globals& g, const std::string& connect, int timeout_ms, std::optional<std::uint64_t> key_seed) {
    const auto cfg = resolve_config(g);
    warn_security(cfg);
    const auto d = resolve_data(g);
    wire::Channel ch(wire::tcp_connect(wire::parse_endpoint(connect), timeout_ms), wire::Party::client);
    split::ClientEngine client(nn::m1_spec(), cfg, ch, key_seed);
    const auto report = client.run(d.train, d.test);
    ch.close();
    print_epochs(report.result.epochs);
    write_metrics(g, "metrics.csv", report.result.epochs);
    write_transcript(g, "transcript.csv", ch.transcript().entries());
    std::vector<nn::LayerParams> convs;
    for (const auto* c : client.layers().conv_layers()) convs.push_back(c->params());
    nn::save_checkpoint(out_file(g, "client.sfhe").string(), convs);
    std::printf("accuracy %.4f\n", report.result.test_accuracy);
    return ok;
}

nn::ModelParams load_model(const std::string& checkpoint, const std::string& head) {
    auto layers = nn::load_checkpoint(checkpoint);
    if (!head.empty()) {
        const auto h = nn::load_checkpoint(head);
        if (h.size() != 1) throw ValueError("head checkpoint must hold exactly one layer");
        layers.push_back(h[0]);
    }
    if (layers.size() != 3) {
        throw ValueError("expected 3 layers (two convs and the head), got " + std::to_string(layers.size()));
    }
    nn::ModelParams p;
    p.conv.assign(layers.begin(), layers.begin() + 2);
    p.linear = layers[2];
    return p;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& head) {
    const auto cfg = resolve_config(g);
    const auto d = resolve_data(g);
    nn::LocalModel model(nn::m1_spec(), load_model(checkpoint, head));
    std::printf("accuracy %.4f\n", nn::evaluate_local(model, d.test, cfg.batch_size));
    return ok;
}

bool batch_tag(wire::Tag t) {
    using wire::Tag;
    return t == Tag::act_plain || t == Tag::act_enc || t == Tag::out_plain || t == Tag::out_enc ||
           t == Tag::grad_out || t == Tag::grad_w || t == Tag::grad_act;
}

// Runs the first K batches of one epoch and extrapolates to a full epoch.
int cmd_bench(const Globals& g, std::size_t batches, std::optional<std::uint64_t> key_seed) {
    auto cfg = resolve_config(g);
    warn_security(cfg);
    const auto d = resolve_data(g);
    const data::BatchPlan plan(d.train.size(), cfg.batch_size, cfg.seed);
    const std::size_t full = plan.batches_per_epoch();
    if (batches == 0 || batches > full) {
        throw ConfigError("batches", "need 1.." + std::to_string(full) + ", got " + std::to_string(batches));
    }
    cfg.epochs = 1;
    cfg.batches_per_epoch = batches;
    split::LoopbackOptions opts;
    opts.key_seed = key_seed;
    std::vector<double> step_ms;
    auto last = std::chrono::steady_clock::now();
    opts.client_hooks.on_activation = [&](std::size_t, std::size_t, const nn::Tensor&) {
        last = std::chrono::steady_clock::now();
    };
    opts.client_hooks.on_step = [&](std::size_t, std::size_t, const nn::Sequential&) {
        step_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - last).count());
    };
    const auto r = split::run_loopback(nn::m1_spec(), cfg, d.train, d.test.head(cfg.batch_size), opts);

    std::uint64_t batch_bytes = 0;
    std::size_t frames = 0;
    for (const auto& e : r.client_transcript) {
        if (e.tag == wire::Tag::epoch_end) break;
        if (batch_tag(e.tag)) {
            batch_bytes += e.bytes;
            ++frames;
        }
    }
    double total_ms = 0;
    for (double m : step_ms) total_ms += m;
    const double mean_bytes = static_cast<double>(batch_bytes) / static_cast<double>(batches);
    const double mean_ms = total_ms / static_cast<double>(step_ms.size());

    auto f = open_out(out_file(g, "bench.csv"));
    f << "mode,batches,mean_batch_ms,mean_batch_bytes,batches_per_epoch,epoch_bytes,setup_bytes\n";
    char line[256];
    std::snprintf(line, sizeof line, "%s,%zu,%.3f,%.1f,%zu,%.0f,%llu\n", mode_name(cfg.mode), batches, mean_ms,
                  mean_bytes, full, mean_bytes * static_cast<double>(full),
                  static_cast<unsigned long long>(r.client.setup.sent + r.client.setup.received));
    f << line;
    write_transcript(g, "bench_transcript.csv", r.client_transcript);
    std::printf("%zu batches (%zu frames): %.3f ms and %.0f bytes per batch\n", batches, frames, mean_ms, mean_bytes);
    std::printf("extrapolated epoch (%zu batches): %.0f bytes, %.1f s\n", full, mean_bytes * static_cast<double>(full),
                mean_ms * static_cast<double>(full) / 1000.0);
    return ok;
}

std::vector<std::size_t> parse_indices(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ValueError("bad sample index '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw ValueError("no sample indices given");
    return out;
}

// Rows: sample,label,series,values... where series is "input" (128 values)
// or "ch0".."ch7" (32 values each).
int cmd_dump(const Globals& g, const std::string& checkpoint, bool zero, const std::string& indices,
             const std::string& split_name) {
    const auto spec = nn::m1_spec();
    std::vector<nn::LayerParams> convs;
    if (zero) {
        convs = nn::zero_params(spec).conv;
    } else {
        if (checkpoint.empty()) throw ConfigError("checkpoint", "give a checkpoint or --zero-weights");
        auto layers = nn::load_checkpoint(checkpoint);
        if (layers.size() < 2) throw ValueError("checkpoint holds fewer than two layers");
        convs.assign(layers.begin(), layers.begin() + 2);
    }
    auto client = nn::build_client(spec, std::move(convs));
    const auto d = resolve_data(g);
    if (split_name != "train" && split_name != "test") throw ConfigError("split", "expected train or test");
    const auto& ds = split_name == "train" ? d.train : d.test;
    const auto idx = parse_indices(indices);
    for (auto i : idx) {
        if (i >= ds.size()) {
            throw ValueError("sample index " + std::to_string(i) + " out of range (" + std::to_string(ds.size()) +
                             " samples)");
        }
    }
    const auto x = ds.gather(idx);
    const auto a = client.forward(x);
    const std::size_t channels = 8, steps = a.shape()[1] / channels;

    auto f = open_out(out_file(g, "activations.csv"));
    f << "sample,label,series,values\n";
    char num[32];
    auto row = [&](std::size_t sample, const std::string& series, const float* v, std::size_t n) {
        f << sample << ',' << ds.labels[sample] << ',' << series;
        for (std::size_t t = 0; t < n; ++t) {
            std::snprintf(num, sizeof num, ",%.9g", static_cast<double>(v[t]));
            f << num;
        }
        f << '\n';
    };
    for (std::size_t k = 0; k < idx.size(); ++k) {
        row(idx[k], "input", x.data().data() + k * data::kTimesteps, data::kTimesteps);
        for (std::size_t c = 0; c < channels; ++c) {
            row(idx[k], "ch" + std::to_string(c), a.data().data() + k * a.shape()[1] + c * steps, steps);
        }
    }
    std::printf("wrote %zu samples to %s\n", idx.size(), out_file(g, "activations.csv").c_str());
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Split learning with a homomorphically encrypted linear head"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON training config")->check(CLI::ExistingFile);
    app.add_option("--data", g.data, "dataset directory or synth:<count>:<seed>")->capture_default_str();
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--mode", g.mode, "override: plain or encrypted");
    app.add_option("--epochs", g.epochs, "override the epoch count");
    app.add_option("--seed", g.seed, "override the shared seed");
    app.add_option("--train-limit", g.train_limit, "use only the first N training samples");
    app.add_option("--test-limit", g.test_limit, "use only the first N test samples");

    std::optional<std::uint64_t> key_seed;
    std::string listen = "127.0.0.1:7000", connect = "127.0.0.1:7000";
    std::string checkpoint, head, indices = "0", dump_split = "test";
    std::size_t bench_batches = 10;
    int connect_timeout_ms = 10000;
    bool zero = false;

    auto* local = app.add_subcommand("train-local", "train the unsplit model");
    auto* tsplit = app.add_subcommand("train-split", "run client and server in one process");
    tsplit->add_option("--key-seed", key_seed, "fix the HE keys (testing only)");
    auto* server = app.add_subcommand("server", "serve the linear head over TCP");
    server->add_option("--listen", listen, "host:port")->capture_default_str();
    auto* client = app.add_subcommand("client", "train as the data holder over TCP");
    client->add_option("--connect", connect, "host:port")->capture_default_str();
    client->add_option("--connect-timeout", connect_timeout_ms, "keep retrying the connect this long (ms)")
        ->capture_default_str();
    client->add_option("--key-seed", key_seed, "fix the HE keys (testing only)");
    auto* eval = app.add_subcommand("eval", "test accuracy of a checkpoint");
    eval->add_option("--checkpoint", checkpoint, "model or client checkpoint")->required();
    eval->add_option("--head", head, "head checkpoint, when the first holds only the convs");
    auto* bench = app.add_subcommand("bench", "time the first K batches and extrapolate an epoch");
    bench->add_option("--batches", bench_batches, "K")->capture_default_str();
    bench->add_option("--key-seed", key_seed, "fix the HE keys (testing only)");
    auto* dump = app.add_subcommand("dump-activations", "write inputs and split-layer activations as CSV");
    dump->add_option("--checkpoint", checkpoint, "model or client checkpoint");
    dump->add_flag("--zero-weights", zero, "use an all-zero client instead of a checkpoint");
    dump->add_option("--samples", indices, "comma-separated sample indices")->capture_default_str();
    dump->add_option("--split", dump_split, "train or test")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        if (*local) return cmd_train_local(g);
        if (*tsplit) return cmd_train_split(g, key_seed);
        if (*server) return cmd_server(g, listen);
        if (*client) return cmd_client(g, connect, connect_timeout_ms, key_seed);
        if (*eval) return cmd_eval(g, checkpoint, head);
        if (*bench) return cmd_bench(g, bench_batches, key_seed);
        if (*dump) return cmd_dump(g, checkpoint, zero, indices, dump_split);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return usage;
    } catch (const ValueError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return usage;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return usage;
    } catch (const TransportError& e) {
        std::fprintf(stderr, "transport error: %s\n", e.what());
        return transport;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "training diverged: %s\n", e.what());
        return divergence;
    } catch (const ProtocolError& e) {
        std::fprintf(stderr, "protocol error: %s\n", e.what());
        return protocol;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return failure;
    }
    return usage;
}
