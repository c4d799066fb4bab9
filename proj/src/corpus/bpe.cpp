// SPDX-License-Identifier: Apache-2.0
#include "xling/corpus/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "xling/util.hpp"

namespace xling::corpus {

namespace {

constexpr uint64_t pair_key(int l, int r) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(l)) << 32) | static_cast<uint32_t>(r);
}

// Split a line into pieces, each space glued to the following run of bytes.
std::vector<std::string> split_pieces(const std::string& text) {
    std::vector<std::string> pieces;
    std::string cur;
    for (char ch : text) {
        if (ch == ' ' && !cur.empty()) {
            pieces.push_back(cur);
            cur.clear();
        }
        cur += ch;
    }
    if (!cur.empty()) pieces.push_back(cur);
    return pieces;
}

std::string escape(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (c == ' ') {
            out += "\\s";
        } else if (c == '\\') {
            out += "\\\\";
        } else if (c < 0x21 || c > 0x7e) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\x%02x", c);
            out += buf;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

std::string unescape(const std::string& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (i + 1 >= s.size()) throw DataError("tokenizer file: dangling escape");
        char c = s[++i];
        if (c == 's') {
            out += ' ';
        } else if (c == '\\') {
            out += '\\';
        } else if (c == 'x') {
            if (i + 2 >= s.size()) throw DataError("tokenizer file: bad \\x escape");
            out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
            i += 2;
        } else {
            throw DataError("tokenizer file: unknown escape");
        }
    }
    return out;
}

}  // namespace

const std::string& TokenizerModel::token_string(int id) const {
    if (id < 0 || id >= vocab_size()) throw DataError("token id out of range");
    return id_to_str_[id];
}

void TokenizerModel::index_merges() {
    merge_rank_.clear();
    for (size_t i = 0; i < merges_.size(); ++i)
        merge_rank_[pair_key(merges_[i].first, merges_[i].second)] = static_cast<int>(i);
}

TokenizerModel TokenizerModel::from_parts(const std::vector<std::string>& alphabet,
                                          const std::vector<std::pair<int, int>>& merges) {
    TokenizerModel m;
    m.id_to_str_.assign(kNumSpecials, "");
    std::fill(std::begin(m.byte_to_id_), std::end(m.byte_to_id_), -1);
    for (const auto& sym : alphabet) {
        if (sym.size() != 1) throw DataError("tokenizer alphabet symbol must be one byte");
        m.byte_to_id_[static_cast<unsigned char>(sym[0])] =
            static_cast<int>(m.id_to_str_.size());
        m.id_to_str_.push_back(sym);
    }
    m.alphabet_size_ = static_cast<int>(alphabet.size());
    for (auto [l, r] : merges) {
        if (l < kNumSpecials || r < kNumSpecials || l >= static_cast<int>(m.id_to_str_.size()) ||
            r >= static_cast<int>(m.id_to_str_.size()))
            throw DataError("tokenizer merge references unknown id");
        m.merges_.emplace_back(l, r);
        m.id_to_str_.push_back(m.id_to_str_[l] + m.id_to_str_[r]);
    }
    m.index_merges();
    return m;
}

std::vector<int> TokenizerModel::encode_piece(const std::string& piece) const {
    std::vector<int> ids;
    ids.reserve(piece.size());
    for (unsigned char c : piece) {
        int id = byte_to_id_[c];
        if (id < 0)
            throw DataError(std::string("tokenizer: byte not in training alphabet: 0x") +
                            to_hex(c).substr(14));
        ids.push_back(id);
    }
    // Repeatedly apply the earliest-trained merge present.
    while (ids.size() > 1) {
        int best_rank = -1;
        for (size_t i = 0; i + 1 < ids.size(); ++i) {
            auto it = merge_rank_.find(pair_key(ids[i], ids[i + 1]));
            if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank))
                best_rank = it->second;
        }
        if (best_rank < 0) break;
        int l = merges_[best_rank].first;
        int r = merges_[best_rank].second;
        int new_id = kNumSpecials + alphabet_size_ + best_rank;
        std::vector<int> next;
        next.reserve(ids.size());
        for (size_t i = 0; i < ids.size();) {
            if (i + 1 < ids.size() && ids[i] == l && ids[i + 1] == r) {
                next.push_back(new_id);
                i += 2;
            } else {
                next.push_back(ids[i]);
                i += 1;
            }
        }
        ids.swap(next);
    }
    return ids;
}

std::vector<int> TokenizerModel::encode(const std::string& text) const {
    std::vector<int> out;
    for (const auto& piece : split_pieces(text)) {
        auto ids = encode_piece(piece);
        out.insert(out.end(), ids.begin(), ids.end());
    }
    return out;
}

std::string TokenizerModel::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) out += token_string(id);
    return out;
}

void TokenizerModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write tokenizer file: " + path);
    out << "xling-bpe v1\n";
    out << "specials pad bos eos\n";
    out << "alphabet " << alphabet_size_ << "\n";
    for (int i = 0; i < alphabet_size_; ++i) out << escape(id_to_str_[kNumSpecials + i]) << "\n";
    out << "merges " << merges_.size() << "\n";
    for (auto [l, r] : merges_) out << l << " " << r << "\n";
}

TokenizerModel TokenizerModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open tokenizer file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "xling-bpe v1")
        throw DataError("tokenizer file: unsupported version header");
    if (!std::getline(in, line) || line.rfind("specials", 0) != 0)
        throw DataError("tokenizer file: missing specials line");
    if (!std::getline(in, line) || line.rfind("alphabet ", 0) != 0)
        throw DataError("tokenizer file: missing alphabet header");
    int alpha = std::stoi(line.substr(9));
    std::vector<std::string> alphabet;
    for (int i = 0; i < alpha; ++i) {
        if (!std::getline(in, line)) throw DataError("tokenizer file: truncated alphabet");
        alphabet.push_back(unescape(line));
    }
    if (!std::getline(in, line) || line.rfind("merges ", 0) != 0)
        throw DataError("tokenizer file: missing merges header");
    int n_merges = std::stoi(line.substr(7));
    std::vector<std::pair<int, int>> merges;
    for (int i = 0; i < n_merges; ++i) {
        if (!std::getline(in, line)) throw DataError("tokenizer file: truncated merge list");
        std::istringstream ls(line);
        int l = -1, r = -1;
        ls >> l >> r;
        if (l < 0 || r < 0) throw DataError("tokenizer file: bad merge line");
        merges.emplace_back(l, r);
    }
    return from_parts(alphabet, merges);
}

TokenizerModel train_tokenizer(const std::vector<std::string>& corpus, int vocab_size) {
    if (corpus.empty()) throw DataError("train_tokenizer: empty corpus");

    bool seen[256] = {};
    std::map<std::string, int64_t> piece_counts;
    for (const auto& line : corpus) {
        for (unsigned char c : line) seen[c] = true;
        for (auto& piece : split_pieces(line)) piece_counts[piece] += 1;
    }
    std::vector<std::string> alphabet;
    for (int c = 0; c < 256; ++c)
        if (seen[c]) alphabet.push_back(std::string(1, static_cast<char>(c)));

    int base = TokenizerModel::kNumSpecials + static_cast<int>(alphabet.size());
    if (vocab_size < base)
        throw ConfigError("train_tokenizer: vocab_size " + std::to_string(vocab_size) +
                          " below alphabet + specials (" + std::to_string(base) + ")");
    int n_merges = vocab_size - base;

    TokenizerModel proto = TokenizerModel::from_parts(alphabet, {});
    std::vector<std::pair<std::vector<int>, int64_t>> pieces;  // (ids, count)
    pieces.reserve(piece_counts.size());
    for (const auto& [piece, count] : piece_counts) {
        std::vector<int> ids;
        for (unsigned char c : piece) ids.push_back(proto.byte_to_id_[c]);
        pieces.emplace_back(std::move(ids), count);
    }

    std::vector<std::string> id_str(proto.id_to_str_);
    std::vector<std::pair<int, int>> merges;
    for (int m = 0; m < n_merges; ++m) {
        std::unordered_map<uint64_t, int64_t> counts;
        for (const auto& [ids, count] : pieces)
            for (size_t i = 0; i + 1 < ids.size(); ++i) counts[pair_key(ids[i], ids[i + 1])] += count;
        if (counts.empty())
            throw DataError("train_tokenizer: corpus exhausted after " + std::to_string(m) +
                            " merges, cannot reach vocab_size " + std::to_string(vocab_size));
        uint64_t best = 0;
        int64_t best_count = -1;
        for (const auto& [key, count] : counts) {
            if (count > best_count) {
                best = key;
                best_count = count;
            } else if (count == best_count) {
                int bl = static_cast<int>(best >> 32), br = static_cast<int>(best & 0xffffffff);
                int kl = static_cast<int>(key >> 32), kr = static_cast<int>(key & 0xffffffff);
                if (std::pair(id_str[kl], id_str[kr]) < std::pair(id_str[bl], id_str[br]))
                    best = key;
            }
        }
        int l = static_cast<int>(best >> 32), r = static_cast<int>(best & 0xffffffff);
        int new_id = static_cast<int>(id_str.size());
        id_str.push_back(id_str[l] + id_str[r]);
        merges.emplace_back(l, r);
        for (auto& [ids, count] : pieces) {
            (void)count;
            std::vector<int> next;
            next.reserve(ids.size());
            for (size_t i = 0; i < ids.size();) {
                if (i + 1 < ids.size() && ids[i] == l && ids[i + 1] == r) {
                    next.push_back(new_id);
                    i += 2;
                } else {
                    next.push_back(ids[i]);
                    i += 1;
                }
            }
            ids.swap(next);
        }
    }
    return TokenizerModel::from_parts(alphabet, merges);
}

}  // namespace xling::corpus
