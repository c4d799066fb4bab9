// SPDX-License-Identifier: Apache-2.0
#include "xling/corpus/synth.hpp"

#include <fstream>
#include <random>

#include "xling/util.hpp"

namespace xling::corpus {

namespace {

// Words are CV-syllable strings over per-language letter stocks, so the two
// built-in languages cannot share a word type.
std::vector<std::string> make_words(const std::string& consonants, const std::string& vowels,
                                    int count, uint64_t seed) {
    std::vector<std::string> words;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> syllables(2, 3);
    std::uniform_int_distribution<size_t> c(0, consonants.size() - 1);
    std::uniform_int_distribution<size_t> v(0, vowels.size() - 1);
    while (static_cast<int>(words.size()) < count) {
        std::string w;
        int n = syllables(rng);
        for (int i = 0; i < n; ++i) {
            w += consonants[c(rng)];
            w += vowels[v(rng)];
        }
        bool dup = false;
        for (const auto& existing : words) dup = dup || existing == w;
        if (!dup) words.push_back(w);
    }
    return words;
}

const std::vector<std::string> kSkeletonsA = {
    "{0} {1} {2}.",
    "{0} {1} {2} {3} {4}.",
    "{0} {1} {2} {3} {4} {5} {6}.",
    "{1} {0} {2} {3}.",
    "{0} {2} {1} {3} {4} {5}.",
    "{0} {1} {2} {3} {4} {5} {6} {7}.",
};

// Language B uses a different surface order for the same slots.
const std::vector<std::string> kSkeletonsB = {
    "{2} {0} {1}.",
    "{4} {0} {1} {2} {3}.",
    "{6} {0} {1} {2} {3} {4} {5}.",
    "{0} {1} {3} {2}.",
    "{1} {0} {3} {2} {5} {4}.",
    "{7} {6} {0} {1} {2} {3} {4} {5}.",
};

std::string render(const std::string& tmpl, const std::vector<std::string>& vocab,
                   const std::vector<int>& word_indices) {
    std::string out;
    for (size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close == std::string::npos) throw DataError("template: unclosed slot");
            int slot = std::stoi(tmpl.substr(i + 1, close - i - 1));
            if (slot < 0 || slot >= static_cast<int>(word_indices.size()))
                throw DataError("template: slot index out of range");
            int w = word_indices[slot];
            if (w < 0 || w >= static_cast<int>(vocab.size()))
                throw DataError("template: word index out of range");
            out += vocab[w];
            i = close;
        } else {
            out += tmpl[i];
        }
    }
    return out;
}

// Word indices follow a Zipf-like law sharpened by a latent topic: each
// document (or parallel pair) carries a topic, and words whose index falls in
// that topic's class are strongly boosted. Both languages draw indices from
// the same law, so they are distributionally isomorphic: index k plays the
// same role in each, and topic inference transfers across them.
constexpr int kTopics = 32;
constexpr double kTopicBoost = 200.0;

int pick_topic_word(std::mt19937_64& rng, int vocab, int topic) {
    std::vector<double> w(vocab);
    for (int i = 0; i < vocab; ++i)
        w[i] = (1.0 / (i + 4)) * (i % kTopics == topic ? kTopicBoost : 1.0);
    std::discrete_distribution<int> pick(w.begin(), w.end());
    return pick(rng);
}

// Digit-spelled anchor tokens are shared verbatim by both languages (like
// numerals or names in natural text) and correlate with the topic, giving the
// two languages common points of reference.
constexpr double kAnchorProb = 0.25;

std::string maybe_anchor(std::mt19937_64& rng, int topic, const std::string& sentence) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) >= kAnchorProb) return sentence;
    std::uniform_int_distribution<int> variant(0, 3);
    return std::to_string(topic * 4 + variant(rng)) + " " + sentence;
}

std::string make_sentence(const LanguageSpec& spec, std::mt19937_64& rng, int topic,
                          int* template_out = nullptr) {
    std::uniform_int_distribution<size_t> pick_tmpl(0, spec.templates.size() - 1);
    size_t t = pick_tmpl(rng);
    int slots = template_slot_count(spec.templates[t]);
    std::vector<int> idx(slots);
    for (auto& i : idx) i = pick_topic_word(rng, static_cast<int>(spec.vocabulary.size()), topic);
    if (template_out) *template_out = static_cast<int>(t);
    return maybe_anchor(rng, topic, render(spec.templates[t], spec.vocabulary, idx));
}

}  // namespace

LanguageSpec default_language_a(uint64_t seed, int word_count) {
    LanguageSpec spec;
    spec.id = "synthA";
    spec.seed = seed;
    spec.vocabulary = make_words("ktrmslnp", "aio", word_count, mix_seed(seed, 1));
    spec.templates = kSkeletonsA;
    return spec;
}

LanguageSpec default_language_b(uint64_t seed, int word_count) {
    LanguageSpec spec;
    spec.id = "synthB";
    spec.seed = seed;
    spec.vocabulary = make_words("vgbdfzwh", "uey", word_count, mix_seed(seed, 2));
    spec.templates = kSkeletonsB;
    return spec;
}

int template_slot_count(const std::string& tmpl) {
    int max_slot = -1;
    for (size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close == std::string::npos) throw DataError("template: unclosed slot");
            int slot = std::stoi(tmpl.substr(i + 1, close - i - 1));
            if (slot > max_slot) max_slot = slot;
            i = close;
        }
    }
    if (max_slot < 0) throw DataError("template has no slots: " + tmpl);
    return max_slot + 1;
}

std::string render_sentence(const LanguageSpec& spec, int template_index,
                            const std::vector<int>& word_indices) {
    if (template_index < 0 || template_index >= static_cast<int>(spec.templates.size()))
        throw DataError("render_sentence: template index out of range");
    return render(spec.templates[template_index], spec.vocabulary, word_indices);
}

Bitext generate_synthetic_bitext(const LanguageSpec& spec_a, const LanguageSpec& spec_b,
                                 int64_t n_pairs, int64_t n_mono, uint64_t seed) {
    if (spec_a.vocabulary.empty() || spec_b.vocabulary.empty())
        throw DataError("generate_synthetic_bitext: empty vocabulary");
    if (spec_a.templates.empty() || spec_b.templates.empty())
        throw DataError("generate_synthetic_bitext: empty template list");
    if (spec_a.templates.size() != spec_b.templates.size())
        throw DataError("generate_synthetic_bitext: template skeleton counts differ");
    if (n_pairs < 1) throw DataError("generate_synthetic_bitext: n_pairs < 1");

    Bitext out;
    out.pairs.reserve(n_pairs);

    // Pair sides share the template index and the latent topic; each side
    // draws its own slot words from the shared topic law and renders with its
    // own vocabulary, so pairs are topical paraphrases rather than
    // word-for-word substitutions. Slot counts must agree per skeleton.
    std::mt19937_64 pair_rng(mix_seed(seed ^ spec_a.seed ^ spec_b.seed, 10));
    std::uniform_int_distribution<size_t> pick_tmpl(0, spec_a.templates.size() - 1);
    int vocab_common =
        static_cast<int>(std::min(spec_a.vocabulary.size(), spec_b.vocabulary.size()));
    std::uniform_int_distribution<int> pick_topic(0, kTopics - 1);
    for (int64_t i = 0; i < n_pairs; ++i) {
        size_t t = pick_tmpl(pair_rng);
        int slots_a = template_slot_count(spec_a.templates[t]);
        int slots_b = template_slot_count(spec_b.templates[t]);
        if (slots_a != slots_b)
            throw DataError("generate_synthetic_bitext: skeleton slot mismatch at template " +
                            std::to_string(t));
        int topic = pick_topic(pair_rng);
        std::vector<int> idx_a(slots_a), idx_b(slots_b);
        for (auto& w : idx_a) w = pick_topic_word(pair_rng, vocab_common, topic);
        for (auto& w : idx_b) w = pick_topic_word(pair_rng, vocab_common, topic);
        ParallelPair pair;
        pair.source = maybe_anchor(pair_rng, topic, render(spec_a.templates[t], spec_a.vocabulary, idx_a));
        pair.target = maybe_anchor(pair_rng, topic, render(spec_b.templates[t], spec_b.vocabulary, idx_b));
        pair.pair_id = i;
        out.pairs.push_back(std::move(pair));
    }

    std::mt19937_64 mono_a_rng(mix_seed(seed ^ spec_a.seed, 11));
    std::mt19937_64 mono_b_rng(mix_seed(seed ^ spec_b.seed, 12));
    std::uniform_int_distribution<int> sentences_per_doc(2, 6);
    std::uniform_int_distribution<int> pick_doc_topic(0, kTopics - 1);
    for (int64_t i = 0; i < n_mono; ++i) {
        std::string doc;
        int n = sentences_per_doc(mono_a_rng);
        int topic = pick_doc_topic(mono_a_rng);
        for (int s = 0; s < n; ++s) {
            if (s) doc += ' ';
            doc += make_sentence(spec_a, mono_a_rng, topic);
        }
        out.mono_a.push_back(std::move(doc));
    }
    for (int64_t i = 0; i < n_mono; ++i) {
        std::string doc;
        int n = sentences_per_doc(mono_b_rng);
        int topic = pick_doc_topic(mono_b_rng);
        for (int s = 0; s < n; ++s) {
            if (s) doc += ' ';
            doc += make_sentence(spec_b, mono_b_rng, topic);
        }
        out.mono_b.push_back(std::move(doc));
    }
    return out;
}

std::vector<std::string> load_monolingual(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open monolingual file: " + path);
    std::vector<std::string> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) docs.push_back(line);
    }
    return docs;
}

std::vector<ParallelPair> load_parallel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open parallel file: " + path);
    std::vector<ParallelPair> pairs;
    std::string line;
    int64_t id = 0;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("parallel file " + path + " line " + std::to_string(lineno) +
                            ": missing tab separator");
        ParallelPair p;
        p.source = line.substr(0, tab);
        p.target = line.substr(tab + 1);
        if (p.source.empty() || p.target.empty())
            throw DataError("parallel file " + path + " line " + std::to_string(lineno) +
                            ": empty side");
        p.pair_id = id++;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

void save_monolingual(const std::vector<std::string>& docs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    for (const auto& d : docs) out << d << "\n";
}

void save_parallel(const std::vector<ParallelPair>& pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    for (const auto& p : pairs) out << p.source << "\t" << p.target << "\n";
}

}  // namespace xling::corpus
