// SPDX-License-Identifier: Apache-2.0
#include "xling/probes/dump.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "xling/util.hpp"

namespace xling::probes {

using json = nlohmann::json;

namespace {
constexpr const char* kMagic = "xling-dump v1";
}

void write_dump(const Dump& dump, const std::string& path) {
    int64_t expect = 1;
    for (int64_t s : dump.shape) expect *= s;
    if (expect != static_cast<int64_t>(dump.payload.size()))
        throw DataError("write_dump: payload size does not match shape");

    json manifest;
    manifest["version"] = 1;
    manifest["kind"] = dump.kind;
    manifest["shape"] = dump.shape;
    manifest["labels"] = dump.labels;
    manifest["pair_ids"] = dump.pair_ids;
    manifest["metadata"] = dump.metadata;
    manifest["payload_fnv1a64"] =
        to_hex(fnv1a64(dump.payload.data(), dump.payload.size() * sizeof(float)));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dump: " + path);
    std::string header = manifest.dump();
    out << kMagic << "\n" << header.size() << "\n" << header;
    out.write(reinterpret_cast<const char*>(dump.payload.data()),
              static_cast<std::streamsize>(dump.payload.size() * sizeof(float)));
    if (!out) throw DataError("dump write failed: " + path);
}

Dump read_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dump: " + path);
    std::string magic;
    std::getline(in, magic);
    if (magic != kMagic) throw DataError("dump: bad magic / format version mismatch: " + path);
    std::string lenline;
    std::getline(in, lenline);
    size_t hlen = 0;
    try {
        hlen = std::stoull(lenline);
    } catch (const std::exception&) {
        throw DataError("dump: corrupt manifest length: " + path);
    }
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw DataError("dump: truncated manifest: " + path);
    json manifest = json::parse(header, nullptr, false);
    if (manifest.is_discarded()) throw DataError("dump: corrupt manifest JSON: " + path);
    if (manifest.at("version").get<int>() != 1)
        throw DataError("dump: unsupported format version: " + path);

    Dump dump;
    dump.kind = manifest.at("kind");
    dump.shape = manifest.at("shape").get<std::vector<int64_t>>();
    dump.labels = manifest.at("labels").get<std::vector<std::string>>();
    dump.pair_ids = manifest.at("pair_ids").get<std::vector<int64_t>>();
    dump.metadata = manifest.at("metadata").get<std::map<std::string, std::string>>();

    int64_t expect = 1;
    for (int64_t s : dump.shape) expect *= s;
    dump.payload.resize(expect);
    in.read(reinterpret_cast<char*>(dump.payload.data()),
            static_cast<std::streamsize>(expect * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(expect * sizeof(float)))
        throw DataError("dump: truncated payload: " + path);

    std::string checksum =
        to_hex(fnv1a64(dump.payload.data(), dump.payload.size() * sizeof(float)));
    if (checksum != manifest.at("payload_fnv1a64").get<std::string>())
        throw DataError("dump: payload checksum mismatch (corrupt file): " + path);
    for (float f : dump.payload)
        if (!std::isfinite(f)) throw NumericError("dump: non-finite payload value: " + path);
    return dump;
}

Dump to_dump(const ActivationSet& set) {
    Dump d;
    d.kind = "activations";
    d.shape = {set.sentences, set.taps, set.dim};
    d.labels = set.labels;
    d.pair_ids = set.pair_ids;
    d.payload = set.values;
    return d;
}

Dump to_dump(const NeuronTable& table) {
    Dump d;
    d.kind = "neurons";
    d.shape = {table.sentences, table.layers, table.hidden};
    d.labels = table.labels;
    d.payload = table.values;
    return d;
}

ActivationSet activation_set_from_dump(const Dump& dump) {
    if (dump.kind != "activations" || dump.shape.size() != 3)
        throw DataError("dump does not hold an activation set");
    ActivationSet set;
    set.sentences = static_cast<int>(dump.shape[0]);
    set.taps = static_cast<int>(dump.shape[1]);
    set.dim = static_cast<int>(dump.shape[2]);
    set.values = dump.payload;
    set.labels = dump.labels;
    set.pair_ids = dump.pair_ids;
    return set;
}

NeuronTable neuron_table_from_dump(const Dump& dump) {
    if (dump.kind != "neurons" || dump.shape.size() != 3)
        throw DataError("dump does not hold a neuron table");
    NeuronTable table;
    table.sentences = static_cast<int>(dump.shape[0]);
    table.layers = static_cast<int>(dump.shape[1]);
    table.hidden = static_cast<int>(dump.shape[2]);
    table.values = dump.payload;
    table.labels = dump.labels;
    return table;
}

}  // namespace xling::probes
