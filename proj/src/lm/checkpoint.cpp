// SPDX-License-Identifier: Apache-2.0
#include "xling/lm/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace xling::lm {

using json = nlohmann::json;

namespace {

constexpr const char* kMagic = "xling-ckpt v1";

json config_to_json(const ModelConfig& c) {
    return json{{"layers", c.layers},       {"model_dim", c.model_dim},
                {"heads", c.heads},         {"head_dim", c.head_dim},
                {"mlp_hidden", c.mlp_hidden}, {"vocab_size", c.vocab_size},
                {"context_len", c.context_len}, {"rotary_base", c.rotary_base}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.layers = j.at("layers");
    c.model_dim = j.at("model_dim");
    c.heads = j.at("heads");
    c.head_dim = j.at("head_dim");
    c.mlp_hidden = j.at("mlp_hidden");
    c.vocab_size = j.at("vocab_size");
    c.context_len = j.at("context_len");
    c.rotary_base = j.at("rotary_base");
    return c;
}

void write_floats(std::ofstream& out, const std::vector<float>& v) {
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::ifstream& in, std::vector<float>& v, size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw DataError("checkpoint: truncated tensor payload");
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json manifest;
    manifest["step"] = ckpt.step;
    manifest["config"] = config_to_json(ckpt.config);
    manifest["seed_lineage"] = ckpt.seed_lineage;
    json tensors = json::array();
    for (const auto& t : ckpt.model.tensors)
        tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    manifest["tensors"] = tensors;
    manifest["optimizer"] = ckpt.has_optimizer;
    if (ckpt.has_optimizer) manifest["optimizer_step"] = ckpt.optimizer.step;

    uint64_t checksum = fnv1a64(ckpt.model.params.data(),
                                ckpt.model.params.size() * sizeof(float));
    if (ckpt.has_optimizer) {
        checksum = fnv1a64(ckpt.optimizer.m.data(), ckpt.optimizer.m.size() * sizeof(float),
                           checksum);
        checksum = fnv1a64(ckpt.optimizer.v.data(), ckpt.optimizer.v.size() * sizeof(float),
                           checksum);
    }
    manifest["payload_fnv1a64"] = to_hex(checksum);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    std::string header = manifest.dump();
    out << kMagic << "\n" << header.size() << "\n" << header;
    write_floats(out, ckpt.model.params);
    if (ckpt.has_optimizer) {
        write_floats(out, ckpt.optimizer.m);
        write_floats(out, ckpt.optimizer.v);
    }
    if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string magic;
    std::getline(in, magic);
    if (magic != kMagic) throw DataError("checkpoint: bad magic / unsupported version");
    std::string lenline;
    std::getline(in, lenline);
    size_t hlen = std::stoull(lenline);
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw DataError("checkpoint: truncated manifest");
    json manifest = json::parse(header);

    Checkpoint ckpt;
    ckpt.step = manifest.at("step");
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.seed_lineage = manifest.at("seed_lineage").get<std::vector<uint64_t>>();
    ckpt.has_optimizer = manifest.at("optimizer");

    ckpt.model = init_model<float>(ckpt.config, 0);
    read_floats(in, ckpt.model.params, ckpt.model.params.size());
    if (ckpt.has_optimizer) {
        ckpt.optimizer.step = manifest.at("optimizer_step");
        read_floats(in, ckpt.optimizer.m, ckpt.model.params.size());
        read_floats(in, ckpt.optimizer.v, ckpt.model.params.size());
    }

    uint64_t checksum =
        fnv1a64(ckpt.model.params.data(), ckpt.model.params.size() * sizeof(float));
    if (ckpt.has_optimizer) {
        checksum = fnv1a64(ckpt.optimizer.m.data(), ckpt.optimizer.m.size() * sizeof(float),
                           checksum);
        checksum = fnv1a64(ckpt.optimizer.v.data(), ckpt.optimizer.v.size() * sizeof(float),
                           checksum);
    }
    if (to_hex(checksum) != manifest.at("payload_fnv1a64").get<std::string>())
        throw DataError("checkpoint: payload checksum mismatch (corrupt file): " + path);

    for (float f : ckpt.model.params)
        if (!std::isfinite(f)) throw NumericError("checkpoint: non-finite parameter value");
    return ckpt;
}

}  // namespace xling::lm
