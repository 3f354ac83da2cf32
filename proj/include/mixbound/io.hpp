#pragma once

// JSON documents for specs, configurations and reports.

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mixbound/bounds.hpp"
#include "mixbound/network.hpp"
#include "mixbound/process.hpp"

namespace mixbound {

using Json = nlohmann::ordered_json;

Json to_json(const ProcessSpec& spec);
ProcessSpec process_spec_from_json(const Json& doc);

Json to_json(const Architecture& arch);
Architecture architecture_from_json(const Json& doc);

Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& doc);

Json to_json(const BoundReport& report);
Json to_json(const TailReport& report);
Json to_json(const Lemma3Report& report);
Json to_json(const SymmetrizationReport& report);
Json to_json(const Lemma4Report& report);
Json to_json(const RademacherEstimate& estimate);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Content hash of the canonical JSON form of a spec.
std::string spec_digest(const ProcessSpec& spec);

}  // namespace mixbound
