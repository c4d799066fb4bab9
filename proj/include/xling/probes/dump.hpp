// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xling/probes/activations.hpp"

namespace xling::probes {

// Self-describing binary container: magic line, JSON manifest (format
// version, kind, shape, label table, pair table, payload checksum, free-form
// metadata), then a contiguous little-endian float32 payload, row-major.
// read(write(x)) is bit-exact.
struct Dump {
    std::string kind;  // "activations" | "neurons" | "control_vectors"
    std::vector<int64_t> shape;
    std::vector<std::string> labels;
    std::vector<int64_t> pair_ids;
    std::map<std::string, std::string> metadata;
    std::vector<float> payload;
};

void write_dump(const Dump& dump, const std::string& path);
// Throws DataError on version mismatch, truncation or checksum mismatch, and
// NumericError on non-finite payload values.
Dump read_dump(const std::string& path);

Dump to_dump(const ActivationSet& set);
Dump to_dump(const NeuronTable& table);
ActivationSet activation_set_from_dump(const Dump& dump);
NeuronTable neuron_table_from_dump(const Dump& dump);

}  // namespace xling::probes
