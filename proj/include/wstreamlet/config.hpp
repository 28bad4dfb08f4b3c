#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace wstreamlet::config {

enum class ChannelType : uint8_t { Homogeneous, TwoClass, Wired };
enum class Policy : uint8_t { Cale, Random, Oracle };

// One experiment scenario. Field names mirror the JSON schema one to one;
// times are in the unit named by the suffix, bandwidth is bytes per second.
// Unknown JSON keys are rejected so a typo cannot silently fall back to a
// default.
struct ScenarioConfig {
    std::string experiment = "E1";  // E1..E6

    uint32_t n = 10;
    std::optional<uint32_t> f_override;  // JSON key "f"; default floor((n-1)/3)

    double t_slot_ms = 10.0;
    double t_guard_ms = 5.0;
    uint32_t k_tx = 2;

    ChannelType channel = ChannelType::TwoClass;
    double p_h = 0.95;     // homogeneous per-attempt link success
    double beta = 0.0;     // two-class: fraction of deep-fade nodes
    double p_good = 0.8;
    double p_fade = 0.4;

    Policy policy = Policy::Cale;
    double alpha = 1.0;
    double omega_min = 0.01;

    // coding plane
    uint32_t b_sym = 204800;
    double epsilon = 0.1;
    uint32_t m = 10;    // encoded symbols per payload
    uint32_t s = 10;    // storage nodes
    uint32_t f_s = 3;   // tolerated unavailable storage nodes

    // retrieval model
    double per = 0.0;                        // per-request erasure probability
    uint32_t r = 2;                          // per-symbol attempt budget
    uint32_t c = 4;                          // parallel request lanes
    double t_max_s = 6.0;
    double bandwidth = 1250000.0;            // bytes/s
    double per_request_overhead_s = 0.010;

    uint64_t header_bytes = 20480;
    uint64_t vote_bytes = 1024;
    uint64_t payload_bytes = 1228800;

    uint64_t epochs = 20000;
    uint32_t runs = 20;
    uint64_t seed = 1;

    uint32_t f() const { return f_override ? *f_override : (n - 1) / 3; }

    // Throws std::invalid_argument naming the offending field when a value is
    // out of range (n < 3f+1, probabilities outside [0,1], runs = 0, ...).
    void validate() const;

    // Experiment presets: the defaults above plus per-experiment overrides
    // (channel type, sweep-relevant fields). The parsed file overrides these.
    static ScenarioConfig defaults_for(const std::string& experiment);

    // JSON round trip. parse() rejects unknown keys at any nesting level and
    // applies defaults_for(experiment) before overlaying the file's values.
    static ScenarioConfig parse(const std::string& json_text);
    std::string to_json() const;  // every field materialized, 2-space indent
};

}  // namespace wstreamlet::config
