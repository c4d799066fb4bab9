// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "xling/corpus/synth.hpp"
#include "xling/corpus/bpe.hpp"
#include "xling/lm/generate.hpp"
#include "xling/probes/activations.hpp"
#include "xling/probes/dump.hpp"

namespace xling::steer {

// One steering direction per tap 1..layers: mean target-language
// representation minus mean source-language representation at that tap.
// Vectors are not norm-normalized; the scale carries all magnitude control.
struct ControlVectorSet {
    std::vector<std::vector<float>> vectors;  // [layers][dim]
    std::string source_language;
    std::string target_language;
    std::string provenance;  // activation-set id
};

ControlVectorSet build_control_vectors(const probes::ActivationSet& set,
                                       const std::string& target_language,
                                       const std::string& provenance = "");

probes::Dump to_dump(const ControlVectorSet& set);
ControlVectorSet control_vectors_from_dump(const probes::Dump& dump);

// Fraction of decoded whitespace-separated words (trailing periods stripped)
// that belong to the language's vocabulary.
double language_fraction(const std::vector<int>& tokens, const corpus::LanguageSpec& lang,
                         const corpus::TokenizerModel& tokenizer);

struct ScaleScore {
    double scale = 0.0;
    double target_fraction = 0.0;
    double plausibility = 0.0;  // exp(mean log-prob under the unsteered model)
    double combined = 0.0;      // target_fraction * plausibility
};

struct SweepResult {
    double best_scale = 0.0;
    std::vector<ScaleScore> scores;
};

// Greedy continuations per (scale, context); argmax of the combined score,
// ties to the smaller scale.
SweepResult sweep_scaling(const lm::Model<float>& model,
                          const std::vector<std::vector<int>>& contexts,
                          const ControlVectorSet& vectors, const std::vector<double>& grid,
                          const corpus::LanguageSpec& target_lang,
                          const corpus::TokenizerModel& tokenizer,
                          const lm::DecodeConfig& decode);

void write_sweep_csv(const SweepResult& result, const std::string& path);

}  // namespace xling::steer
