// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "xling/lm/model.hpp"
#include "xling/probes/activations.hpp"
#include "xling/probes/dump.hpp"
#include "xling/util.hpp"

using namespace xling;
using namespace xling::lm;
using namespace xling::probes;

namespace {
ModelConfig probe_config() {
    ModelConfig c;
    c.layers = 3;
    c.model_dim = 16;
    c.heads = 2;
    c.head_dim = 8;
    c.mlp_hidden = 20;
    c.vocab_size = 30;
    c.context_len = 16;
    return c;
}
}  // namespace

TEST_CASE("extraction shapes follow the model") {
    auto cfg = probe_config();
    auto model = init_model<float>(cfg, 12);
    std::vector<std::vector<int>> sents = {{1, 5, 6, 2}, {1, 7, 8, 9, 2}, {1, 10, 2}};
    std::vector<std::string> labels = {"A", "A", "B"};
    std::vector<int64_t> ids = {0, 1, 0};
    auto r = extract_all(model, sents, labels, ids, {0, 1, 2});
    CHECK(r.activations.sentences == 3);
    CHECK(r.activations.taps == cfg.layers + 1);
    CHECK(r.activations.dim == cfg.model_dim);
    CHECK(r.activations.values.size() == size_t(3) * (cfg.layers + 1) * cfg.model_dim);
    CHECK(r.neurons.sentences == 3);
    CHECK(r.neurons.layers == cfg.layers);
    CHECK(r.neurons.hidden == cfg.mlp_hidden);
    CHECK(r.neurons.values.size() == size_t(3) * cfg.layers * cfg.mlp_hidden);
}

TEST_CASE("pooling ignores special tokens") {
    auto cfg = probe_config();
    auto model = init_model<float>(cfg, 12);
    // same content, one padded/wrapped differently: pooled vectors must match
    std::vector<std::vector<int>> sents = {{5, 6, 7}, {1, 5, 6, 7, 2}};
    std::vector<std::string> labels = {"A", "A"};
    std::vector<int64_t> ids = {-1, -1};
    auto r = extract_sentence_representations(model, sents, labels, ids, {0, 1, 2});
    // tap 0 is post-embedding: identical token embeddings get pooled either way
    for (int d = 0; d < cfg.model_dim; ++d)
        CHECK(r.row(0, 0)[d] == doctest::Approx(r.row(1, 0)[d]).epsilon(1e-6));
}

TEST_CASE("mean pooling at tap 0 averages the embedding rows") {
    auto cfg = probe_config();
    auto model = init_model<float>(cfg, 30);
    std::vector<std::vector<int>> sents = {{4, 9}};
    auto r = extract_sentence_representations(model, sents, {"A"}, {-1}, {0, 1, 2});
    for (int d = 0; d < cfg.model_dim; ++d) {
        float expected = 0.5f * (model.p(model.embed)[4 * cfg.model_dim + d] +
                                 model.p(model.embed)[9 * cfg.model_dim + d]);
        CHECK(r.row(0, 0)[d] == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("dump files round-trip bit exactly") {
    Dump d;
    d.kind = "activations";
    d.shape = {2, 3, 4};
    d.labels = {"A", "B"};
    d.pair_ids = {0, 0};
    d.metadata["note"] = "round trip";
    d.payload.resize(24);
    for (size_t i = 0; i < d.payload.size(); ++i) d.payload[i] = 0.5f * i - 3.25f;

    std::string path = "dump_test.bin";
    write_dump(d, path);
    auto loaded = read_dump(path);
    CHECK(loaded.kind == d.kind);
    CHECK(loaded.shape == d.shape);
    CHECK(loaded.labels == d.labels);
    CHECK(loaded.pair_ids == d.pair_ids);
    CHECK(loaded.metadata.at("note") == "round trip");
    CHECK(loaded.payload == d.payload);
    std::remove(path.c_str());
}

TEST_CASE("dump reader rejects corruption") {
    Dump d;
    d.kind = "neurons";
    d.shape = {1, 4};
    d.payload = {1.f, 2.f, 3.f, 4.f};
    std::string path = "dump_corrupt.bin";

    write_dump(d, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-4, std::ios::end);
        float garbage = -99.0f;
        f.write(reinterpret_cast<const char*>(&garbage), sizeof(garbage));
    }
    CHECK_THROWS_AS(read_dump(path), DataError);

    // truncation
    write_dump(d, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 6);
    CHECK_THROWS_AS(read_dump(path), DataError);

    std::remove(path.c_str());
    CHECK_THROWS_AS(read_dump(path), DataError);  // missing file
}

TEST_CASE("activation sets convert through dumps losslessly") {
    auto cfg = probe_config();
    auto model = init_model<float>(cfg, 66);
    std::vector<std::vector<int>> sents = {{1, 4, 5, 2}, {1, 6, 2}};
    auto r = extract_all(model, sents, {"A", "B"}, {3, 3}, {0, 1, 2});

    auto d1 = to_dump(r.activations);
    auto back = activation_set_from_dump(d1);
    CHECK(back.values == r.activations.values);
    CHECK(back.labels == r.activations.labels);
    CHECK(back.pair_ids == r.activations.pair_ids);

    auto d2 = to_dump(r.neurons);
    auto table = neuron_table_from_dump(d2);
    CHECK(table.values == r.neurons.values);
    CHECK(table.layers == r.neurons.layers);
}
