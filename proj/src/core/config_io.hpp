// JSON config loading, saving and hashing. Errors name the offending field
// by path ("groups[1].cost_dist.c_max") and carry errc::config.
#pragma once

#include <cstdint>
#include <string>

#include "market_model.hpp"

namespace lm {

// Parse and validate a config from a JSON string or file.
market_config parse_config(const std::string& json_text);
market_config load_config(const std::string& path);

// Canonical serialization (sorted keys, explicit defaults); parse(dump(cfg))
// reproduces cfg exactly.
std::string dump_config(const market_config& cfg);

// FNV-1a 64-bit hash of the canonical serialization, stamped into every
// artifact so outputs can be traced back to their inputs.
uint64_t config_hash(const market_config& cfg);
std::string config_hash_hex(const market_config& cfg);

uint64_t fnv1a64(const std::string& bytes);

}  // namespace lm
