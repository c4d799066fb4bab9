// SPDX-License-Identifier: Apache-2.0
#include "xling/corpus/pack.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "xling/util.hpp"

namespace xling::corpus {

const char* stream_name(StreamId id) {
    switch (id) {
        case StreamId::MonoA: return "mono-A";
        case StreamId::MonoB: return "mono-B";
        case StreamId::Parallel: return "parallel";
    }
    return "?";
}

int64_t chunk_payload_tokens(const Chunk& chunk) {
    return static_cast<int64_t>(chunk.tokens.size()) - chunk.pad_count;
}

PackResult pack_chunks(const std::vector<std::vector<int>>& docs, StreamId stream,
                       int context_len, int bos_id, int eos_id, int pad_id) {
    if (context_len < 8) throw ConfigError("pack_chunks: context_len < 8");
    PackResult result;

    if (stream == StreamId::Parallel) {
        Chunk cur;
        cur.stream = stream;
        for (size_t d = 0; d < docs.size(); ++d) {
            const auto& doc = docs[d];
            if (doc.empty()) throw DataError("pack_chunks: empty document " + std::to_string(d));
            int wrapped = static_cast<int>(doc.size()) + 2;
            if (wrapped > context_len)
                throw DataError("pack_chunks: parallel sequence " + std::to_string(d) +
                                " needs " + std::to_string(wrapped) + " tokens, context is " +
                                std::to_string(context_len));
            if (static_cast<int>(cur.tokens.size()) + wrapped > context_len) {
                cur.pad_count = context_len - static_cast<int>(cur.tokens.size());
                cur.tokens.resize(context_len, pad_id);
                result.chunks.push_back(std::move(cur));
                cur = Chunk{};
                cur.stream = stream;
            }
            cur.tokens.push_back(bos_id);
            cur.tokens.insert(cur.tokens.end(), doc.begin(), doc.end());
            cur.tokens.push_back(eos_id);
        }
        if (!cur.tokens.empty()) {
            cur.pad_count = context_len - static_cast<int>(cur.tokens.size());
            cur.tokens.resize(context_len, pad_id);
            result.chunks.push_back(std::move(cur));
        }
        return result;
    }

    // Monolingual: one continuous token stream, cut into full windows.
    Chunk cur;
    cur.stream = stream;
    cur.tokens.reserve(context_len);
    auto emit = [&](int tok) {
        cur.tokens.push_back(tok);
        if (static_cast<int>(cur.tokens.size()) == context_len) {
            result.chunks.push_back(std::move(cur));
            cur = Chunk{};
            cur.stream = stream;
            cur.tokens.reserve(context_len);
        }
    };
    for (size_t d = 0; d < docs.size(); ++d) {
        const auto& doc = docs[d];
        if (doc.empty()) throw DataError("pack_chunks: empty document " + std::to_string(d));
        emit(bos_id);
        for (int tok : doc) emit(tok);
        emit(eos_id);
    }
    result.tail = std::move(cur.tokens);
    return result;
}

void save_chunks(const std::vector<Chunk>& chunks, int context_len, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write chunks: " + path);
    out << "xling-chunks v1\n" << chunks.size() << " " << context_len << "\n";
    for (const auto& c : chunks) {
        if (static_cast<int>(c.tokens.size()) != context_len)
            throw DataError("save_chunks: chunk length != context_len");
        uint8_t stream = static_cast<uint8_t>(c.stream);
        int32_t pad = c.pad_count;
        out.write(reinterpret_cast<const char*>(&stream), 1);
        out.write(reinterpret_cast<const char*>(&pad), 4);
        std::vector<int32_t> toks(c.tokens.begin(), c.tokens.end());
        out.write(reinterpret_cast<const char*>(toks.data()),
                  static_cast<std::streamsize>(toks.size() * 4));
    }
    if (!out) throw DataError("chunk write failed: " + path);
}

std::vector<Chunk> load_chunks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open chunks: " + path);
    std::string magic, header;
    std::getline(in, magic);
    if (magic != "xling-chunks v1") throw DataError("chunks: bad magic: " + path);
    std::getline(in, header);
    size_t count = 0;
    int context_len = 0;
    if (std::sscanf(header.c_str(), "%zu %d", &count, &context_len) != 2)
        throw DataError("chunks: bad header: " + path);
    std::vector<Chunk> chunks;
    chunks.reserve(count);
    std::vector<int32_t> toks(context_len);
    for (size_t i = 0; i < count; ++i) {
        uint8_t stream = 0;
        int32_t pad = 0;
        in.read(reinterpret_cast<char*>(&stream), 1);
        in.read(reinterpret_cast<char*>(&pad), 4);
        in.read(reinterpret_cast<char*>(toks.data()),
                static_cast<std::streamsize>(toks.size() * 4));
        if (!in) throw DataError("chunks: truncated file: " + path);
        Chunk c;
        c.stream = static_cast<StreamId>(stream);
        c.pad_count = pad;
        c.tokens.assign(toks.begin(), toks.end());
        chunks.push_back(std::move(c));
    }
    return chunks;
}

namespace {

// Pull chunks from one stream until the budget is met, cycling with a
// reshuffle per epoch when upsampling is allowed.
void take_stream(const std::vector<Chunk>& pool, int64_t budget, std::mt19937_64& rng,
                 bool allow_upsampling, StreamId id, std::vector<Chunk>& out) {
    if (budget <= 0) return;
    if (pool.empty())
        throw DataError(std::string("assemble_mixture: stream ") + stream_name(id) +
                        " has a budget but no chunks");
    std::vector<size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    int64_t taken = 0;
    size_t pos = 0;
    int epoch = 0;
    std::shuffle(order.begin(), order.end(), rng);
    while (taken < budget) {
        if (pos == order.size()) {
            if (!allow_upsampling)
                throw DataError(std::string("assemble_mixture: stream ") + stream_name(id) +
                                " underfull (" + std::to_string(taken) + " of " +
                                std::to_string(budget) + " tokens) and upsampling disabled");
            std::shuffle(order.begin(), order.end(), rng);
            pos = 0;
            ++epoch;
        }
        const Chunk& c = pool[order[pos++]];
        taken += chunk_payload_tokens(c);
        out.push_back(c);
    }
    (void)epoch;
}

}  // namespace

std::vector<Chunk> assemble_mixture(const MixSpec& spec, const std::vector<Chunk>& mono_a,
                                    const std::vector<Chunk>& mono_b,
                                    const std::vector<Chunk>& parallel, uint64_t seed,
                                    bool allow_upsampling) {
    std::vector<Chunk> out;
    std::mt19937_64 rng_a(mix_seed(seed, 21));
    std::mt19937_64 rng_b(mix_seed(seed, 22));
    std::mt19937_64 rng_p(mix_seed(seed, 23));
    take_stream(mono_a, spec.english_tokens, rng_a, allow_upsampling, StreamId::MonoA, out);
    take_stream(mono_b, spec.finnish_tokens, rng_b, allow_upsampling, StreamId::MonoB, out);
    take_stream(parallel, spec.parallel_tokens, rng_p, allow_upsampling, StreamId::Parallel, out);
    std::mt19937_64 shuffle_rng(mix_seed(seed, 24));
    std::shuffle(out.begin(), out.end(), shuffle_rng);
    return out;
}

}  // namespace xling::corpus
