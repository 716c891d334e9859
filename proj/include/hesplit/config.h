#pragma once

#include <cstdint>
#include <string>

#include "hesplit/bytes.h"
#include "hesplit/ckks/params.h"
#include "hesplit/error.h"

namespace hesplit {

enum class Mode { plain, encrypted };

const char* mode_name(Mode m);

// Invalid configuration value; `field` names the JSON key.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error("config field '" + field + "': " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Hyperparameters both parties agree on during the handshake.
struct TrainConfig {
    Mode mode = Mode::plain;
    float eta = 0.001f;
    std::size_t batch_size = 4;
    // 0 means "derive from the dataset"; the client fills it in before SYNC.
    std::size_t batches_per_epoch = 0;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    ckks::Params he;
    // Run the evaluation round-trips encrypted. Defaults to the training mode.
    bool encrypted_eval = false;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// JSON: {mode, eta, batch_size, epochs, seed, he: {poly_modulus,
// coeff_mod_bits, scale_bits}} plus optional batches_per_epoch and eval.
TrainConfig parse_config(const std::string& json_text);
TrainConfig load_config(const std::string& path);
std::string config_to_json(const TrainConfig& cfg);

void write_config(ByteWriter& w, const TrainConfig& cfg);
TrainConfig read_config(ByteReader& r);

}  // namespace hesplit
