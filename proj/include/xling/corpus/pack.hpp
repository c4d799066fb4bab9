// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xling/corpus/mix.hpp"

namespace xling::corpus {

enum class StreamId : uint8_t { MonoA = 0, MonoB = 1, Parallel = 2 };

const char* stream_name(StreamId id);

// Fixed-length training window; tokens.size() == context length always.
// pad_count > 0 only for parallel-stream chunks.
struct Chunk {
    std::vector<int> tokens;
    StreamId stream = StreamId::MonoA;
    int pad_count = 0;
};

// Monolingual packing leaves an unfinished tail instead of emitting a padded
// chunk; chunks + tail conserve the input tokens exactly.
struct PackResult {
    std::vector<Chunk> chunks;
    std::vector<int> tail;  // monolingual leftover, shorter than one context
};

// Monolingual: each doc wrapped bos ... eos, concatenated, docs spill across
// chunk boundaries. Parallel: maximum whole wrapped sequences per chunk, the
// remainder padded; a sequence never splits across chunks.
PackResult pack_chunks(const std::vector<std::vector<int>>& docs, StreamId stream,
                       int context_len, int bos_id, int eos_id, int pad_id);

// Number of tokens a chunk contributes towards a stream budget (non-pad).
int64_t chunk_payload_tokens(const Chunk& chunk);

// Binary chunk-list container (manifest + little-endian int32 token payload).
void save_chunks(const std::vector<Chunk>& chunks, int context_len, const std::string& path);
std::vector<Chunk> load_chunks(const std::string& path);

// Draw chunks per stream until each MixSpec budget is met (within one chunk),
// then shuffle globally. Streams cycle with a per-epoch reshuffle when
// upsampling is allowed; otherwise an underfull stream is an error.
std::vector<Chunk> assemble_mixture(const MixSpec& spec,
                                    const std::vector<Chunk>& mono_a,
                                    const std::vector<Chunk>& mono_b,
                                    const std::vector<Chunk>& parallel, uint64_t seed,
                                    bool allow_upsampling = true);

}  // namespace xling::corpus
