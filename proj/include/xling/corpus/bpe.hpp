// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace xling::corpus {

// Byte-level BPE over whitespace-attached pieces (a space stays glued to the
// word that follows it, so decode is plain concatenation). Ids: 0 pad, 1 bos,
// 2 eos, then the corpus byte alphabet in byte order, then merges in training
// order. Vocabulary size is exactly the configured size.
class TokenizerModel {
public:
    static constexpr int kPadId = 0;
    static constexpr int kBosId = 1;
    static constexpr int kEosId = 2;
    static constexpr int kNumSpecials = 3;

    int vocab_size() const { return static_cast<int>(id_to_str_.size()); }
    const std::string& token_string(int id) const;
    const std::vector<std::pair<int, int>>& merges() const { return merges_; }
    int alphabet_size() const { return alphabet_size_; }

    std::vector<int> encode(const std::string& text) const;
    // Specials decode to "" so decode(encode(x)) == x also with wrapping.
    std::string decode(const std::vector<int>& ids) const;

    void save(const std::string& path) const;
    static TokenizerModel load(const std::string& path);

    // Rebuilds a model from its alphabet and ordered merge list.
    static TokenizerModel from_parts(const std::vector<std::string>& alphabet,
                                     const std::vector<std::pair<int, int>>& merges);

private:
    friend TokenizerModel train_tokenizer(const std::vector<std::string>& corpus, int vocab_size);

    std::vector<std::string> id_to_str_;           // index = id; specials map to ""
    std::vector<std::pair<int, int>> merges_;      // (left id, right id), new id = base + index
    std::unordered_map<uint64_t, int> merge_rank_; // key = (l<<32)|r -> merge index
    int byte_to_id_[256];
    int alphabet_size_ = 0;

    void index_merges();
    std::vector<int> encode_piece(const std::string& piece) const;
};

// Greedy highest-pair-frequency training; ties merge the lexicographically
// smaller (left string, right string) pair. Deterministic given the corpus.
TokenizerModel train_tokenizer(const std::vector<std::string>& corpus, int vocab_size);

}  // namespace xling::corpus
