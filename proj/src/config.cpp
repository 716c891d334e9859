#include "hesplit/config.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hesplit {

using nlohmann::json;

const char* mode_name(Mode m) { return m == Mode::plain ? "plain" : "encrypted"; }

void TrainConfig::validate() const {
    if (!(eta > 0.0f) || !std::isfinite(eta)) throw ConfigError("eta", "must be a positive finite number");
    if (batch_size == 0) throw ConfigError("batch_size", "must be at least 1");
    if (epochs == 0) throw ConfigError("epochs", "must be at least 1");
    if (mode == Mode::encrypted || encrypted_eval) {
        try {
            he.validate();
        } catch (const Error& e) {
            throw ConfigError("he", e.what());
        }
        if (batch_size > he.slots()) throw ConfigError("batch_size", "exceeds the ciphertext slot capacity");
    }
}

namespace {

template <typename T>
T field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key, e.what());
    }
}

}  // namespace

TrainConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", e.what());
    }
    if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");

    TrainConfig cfg;
    const auto mode = field<std::string>(j, "mode", "plain");
    if (mode == "plain") {
        cfg.mode = Mode::plain;
    } else if (mode == "encrypted") {
        cfg.mode = Mode::encrypted;
    } else {
        throw ConfigError("mode", "expected 'plain' or 'encrypted', got '" + mode + "'");
    }
    cfg.eta = static_cast<float>(field<double>(j, "eta", cfg.eta));
    const auto signed_count = [&](const char* key, std::size_t fallback) {
        const auto v = field<long long>(j, key, static_cast<long long>(fallback));
        if (v < 0) throw ConfigError(key, "must be non-negative");
        return static_cast<std::size_t>(v);
    };
    cfg.batch_size = signed_count("batch_size", cfg.batch_size);
    cfg.epochs = signed_count("epochs", cfg.epochs);
    cfg.batches_per_epoch = signed_count("batches_per_epoch", 0);
    cfg.seed = field<std::uint64_t>(j, "seed", cfg.seed);
    if (j.contains("he")) {
        const auto& h = j.at("he");
        if (!h.is_object()) throw ConfigError("he", "expected an object");
        try {
            cfg.he.poly_degree = h.value("poly_modulus", cfg.he.poly_degree);
            cfg.he.coeff_bits = h.value("coeff_mod_bits", cfg.he.coeff_bits);
            cfg.he.scale_bits = h.value("scale_bits", cfg.he.scale_bits);
            cfg.he.noise_free = h.value("test_noise_free", false);
        } catch (const json::exception& e) {
            throw ConfigError("he", e.what());
        }
    }
    const auto eval = field<std::string>(j, "eval", cfg.mode == Mode::encrypted ? "encrypted" : "plain");
    if (eval == "plain") {
        cfg.encrypted_eval = false;
    } else if (eval == "encrypted") {
        cfg.encrypted_eval = true;
    } else {
        throw ConfigError("eval", "expected 'plain' or 'encrypted', got '" + eval + "'");
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const TrainConfig& cfg) {
    json j = {
        {"mode", mode_name(cfg.mode)},
        {"eta", cfg.eta},
        {"batch_size", cfg.batch_size},
        {"epochs", cfg.epochs},
        {"seed", cfg.seed},
        {"eval", cfg.encrypted_eval ? "encrypted" : "plain"},
        {"he", {{"poly_modulus", cfg.he.poly_degree}, {"coeff_mod_bits", cfg.he.coeff_bits},
                {"scale_bits", cfg.he.scale_bits}}},
    };
    if (cfg.batches_per_epoch) j["batches_per_epoch"] = cfg.batches_per_epoch;
    if (cfg.he.noise_free) j["he"]["test_noise_free"] = true;
    return j.dump(2);
}

void write_config(ByteWriter& w, const TrainConfig& cfg) {
    w.u8(cfg.mode == Mode::plain ? 0 : 1);
    w.f32(cfg.eta);
    w.u64(cfg.batch_size);
    w.u64(cfg.batches_per_epoch);
    w.u64(cfg.epochs);
    w.u64(cfg.seed);
    w.u8(cfg.encrypted_eval ? 1 : 0);
    w.u64(cfg.he.poly_degree);
    w.u32(static_cast<std::uint32_t>(cfg.he.coeff_bits.size()));
    for (int b : cfg.he.coeff_bits) w.u32(static_cast<std::uint32_t>(b));
    w.u32(static_cast<std::uint32_t>(cfg.he.scale_bits));
    w.u8(cfg.he.noise_free ? 1 : 0);
}

TrainConfig read_config(ByteReader& r) {
    TrainConfig cfg;
    const auto mode = r.u8("mode");
    if (mode > 1) throw ProtocolError("unknown mode byte " + std::to_string(mode));
    cfg.mode = mode == 0 ? Mode::plain : Mode::encrypted;
    cfg.eta = r.f32("eta");
    cfg.batch_size = r.u64("batch_size");
    cfg.batches_per_epoch = r.u64("batches_per_epoch");
    cfg.epochs = r.u64("epochs");
    cfg.seed = r.u64("seed");
    cfg.encrypted_eval = r.u8("eval") != 0;
    cfg.he.poly_degree = r.u64("poly_modulus");
    const auto chain = r.u32("chain length");
    if (chain > 64) throw ProtocolError("coefficient chain too long");
    cfg.he.coeff_bits.resize(chain);
    for (auto& b : cfg.he.coeff_bits) b = static_cast<int>(r.u32("coeff bits"));
    cfg.he.scale_bits = static_cast<int>(r.u32("scale bits"));
    cfg.he.noise_free = r.u8("noise flag") != 0;
    return cfg;
}

}  // namespace hesplit
