// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xling::corpus {

// A synthetic language: a closed word list plus slot-bearing sentence
// templates ("{0} {1} {2}."). Two languages generated for the same template
// skeletons yield meaning-aligned sentence pairs with disjoint vocabularies.
struct LanguageSpec {
    std::string id;
    std::vector<std::string> vocabulary;
    std::vector<std::string> templates;  // slots written {0}, {1}, ...
    uint64_t seed = 0;
};

struct ParallelPair {
    std::string source;
    std::string target;
    int64_t pair_id = 0;
};

struct Bitext {
    std::vector<ParallelPair> pairs;
    std::vector<std::string> mono_a;  // one document per entry
    std::vector<std::string> mono_b;
};

// Two built-in toy languages with disjoint word stocks and shared template
// skeletons. word_count words per language.
LanguageSpec default_language_a(uint64_t seed, int word_count = 48);
LanguageSpec default_language_b(uint64_t seed, int word_count = 48);

// n aligned pairs plus n_mono independent monolingual documents per side.
// Deterministic under (specs, seed).
Bitext generate_synthetic_bitext(const LanguageSpec& spec_a, const LanguageSpec& spec_b,
                                 int64_t n_pairs, int64_t n_mono, uint64_t seed);

// number of slots in a template; throws DataError when a template has none.
int template_slot_count(const std::string& tmpl);

// Instantiate a template with words drawn from the language's vocabulary.
std::string render_sentence(const LanguageSpec& spec, int template_index,
                            const std::vector<int>& word_indices);

// File ingestion: one document per line (monolingual), tab-separated
// source/target per line (parallel).
std::vector<std::string> load_monolingual(const std::string& path);
std::vector<ParallelPair> load_parallel(const std::string& path);
void save_monolingual(const std::vector<std::string>& docs, const std::string& path);
void save_parallel(const std::vector<ParallelPair>& pairs, const std::string& path);

}  // namespace xling::corpus
