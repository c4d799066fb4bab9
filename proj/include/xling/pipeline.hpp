// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "xling/config.hpp"
#include "xling/corpus/bpe.hpp"
#include "xling/corpus/pack.hpp"
#include "xling/corpus/synth.hpp"
#include "xling/corpus/templates.hpp"
#include "xling/judge/judge.hpp"
#include "xling/lm/train.hpp"
#include "xling/metrics/metrics.hpp"

namespace xling::pipeline {

// One config drives the whole experiment; every field has a desk-scale
// default and maps to a `section.key` in the key-value config file.
struct ExperimentConfig {
    uint64_t seed = 42;

    // mixture
    int64_t total_tokens = 2'000'000;
    std::vector<double> parallel_fractions = {0.0, 0.05};
    double english_ratio = 0.5;

    // synthetic corpus (real-text paths override generation when set)
    int word_count = 256;
    int64_t n_pairs = 4000;
    int64_t n_mono = 6000;
    std::string mono_a_path, mono_b_path, parallel_path;

    int vocab_size = 1024;

    lm::ModelConfig model;
    lm::TrainConfig train;
    metrics::AnalysisConfig analysis;

    int eval_pairs = 192;

    std::vector<double> steer_grid = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    int steer_contexts = 8;
    int steer_max_new = 24;

    bool judge_enabled = false;
    judge::Endpoint judge_endpoint;
    int judge_completions = 5;  // completions per context

    static ExperimentConfig from_config(const KeyValueConfig& kv);
    KeyValueConfig to_config() const;
    uint64_t config_hash() const;
};

// Fixed derived inputs shared by training and evaluation.
struct CorpusBundle {
    corpus::LanguageSpec lang_a, lang_b;
    corpus::Bitext train_text;
    corpus::Bitext eval_text;  // disjoint seed from training data
    corpus::TemplateSet templates;
};

CorpusBundle build_corpus(const ExperimentConfig& cfg);

corpus::TokenizerModel build_tokenizer(const ExperimentConfig& cfg, const CorpusBundle& bundle);

struct PackedStreams {
    std::vector<corpus::Chunk> mono_a, mono_b, parallel;
};

PackedStreams pack_streams(const ExperimentConfig& cfg, const CorpusBundle& bundle,
                           const corpus::TokenizerModel& tokenizer);

// Runs the full experiment into out_dir, skipping work whose artifacts are
// already present, and writes report/report.json plus CSVs and charts.
// Returns the report path.
std::string reproduce(const ExperimentConfig& cfg, const std::string& out_dir,
                      std::ostream& log);

// Helpers shared with the CLI and tests.
std::string fraction_label(double fraction);
std::vector<std::vector<int>> tokenize_sentences(const std::vector<std::string>& sentences,
                                                 const corpus::TokenizerModel& tokenizer);

}  // namespace xling::pipeline
