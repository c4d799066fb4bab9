// SPDX-License-Identifier: Apache-2.0
#include "xling/steer/steer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "../metrics/common.hpp"

namespace xling::steer {

ControlVectorSet build_control_vectors(const probes::ActivationSet& set,
                                       const std::string& target_language,
                                       const std::string& provenance) {
    auto [lang_a, lang_b] = metrics::detail::language_pair(set.labels);
    if (target_language != lang_a && target_language != lang_b)
        throw DataError("build_control_vectors: unknown target language " + target_language);
    std::string source_language = target_language == lang_a ? lang_b : lang_a;
    metrics::detail::matched_pairs(set);  // enforces complete pairing

    int layers = set.taps - 1;
    ControlVectorSet out;
    out.source_language = source_language;
    out.target_language = target_language;
    out.provenance = provenance;
    out.vectors.assign(layers, std::vector<float>(set.dim, 0.0f));

    // taps 1..layers only; tap 0 is pre-block and is never steered
    for (int l = 1; l <= layers; ++l) {
        std::vector<double> mean_tgt(set.dim, 0.0), mean_src(set.dim, 0.0);
        int n_tgt = 0, n_src = 0;
        for (int s = 0; s < set.sentences; ++s) {
            const float* r = set.row(s, l);
            if (set.labels[s] == target_language) {
                for (int i = 0; i < set.dim; ++i) mean_tgt[i] += r[i];
                ++n_tgt;
            } else {
                for (int i = 0; i < set.dim; ++i) mean_src[i] += r[i];
                ++n_src;
            }
        }
        if (n_tgt == 0 || n_src == 0)
            throw DataError("build_control_vectors: a language side is empty");
        for (int i = 0; i < set.dim; ++i)
            out.vectors[l - 1][i] =
                static_cast<float>(mean_tgt[i] / n_tgt - mean_src[i] / n_src);
    }
    return out;
}

probes::Dump to_dump(const ControlVectorSet& set) {
    probes::Dump d;
    d.kind = "control_vectors";
    int layers = static_cast<int>(set.vectors.size());
    int dim = layers ? static_cast<int>(set.vectors[0].size()) : 0;
    d.shape = {layers, dim};
    d.metadata["source_language"] = set.source_language;
    d.metadata["target_language"] = set.target_language;
    d.metadata["provenance"] = set.provenance;
    d.payload.reserve(static_cast<size_t>(layers) * dim);
    for (const auto& v : set.vectors) d.payload.insert(d.payload.end(), v.begin(), v.end());
    return d;
}

ControlVectorSet control_vectors_from_dump(const probes::Dump& dump) {
    if (dump.kind != "control_vectors" || dump.shape.size() != 2)
        throw DataError("dump does not hold control vectors");
    ControlVectorSet set;
    int layers = static_cast<int>(dump.shape[0]);
    int dim = static_cast<int>(dump.shape[1]);
    set.vectors.assign(layers, std::vector<float>(dim));
    for (int l = 0; l < layers; ++l)
        std::copy(dump.payload.begin() + static_cast<size_t>(l) * dim,
                  dump.payload.begin() + static_cast<size_t>(l + 1) * dim,
                  set.vectors[l].begin());
    set.source_language = dump.metadata.count("source_language")
                              ? dump.metadata.at("source_language")
                              : "";
    set.target_language = dump.metadata.count("target_language")
                              ? dump.metadata.at("target_language")
                              : "";
    set.provenance = dump.metadata.count("provenance") ? dump.metadata.at("provenance") : "";
    return set;
}

double language_fraction(const std::vector<int>& tokens, const corpus::LanguageSpec& lang,
                         const corpus::TokenizerModel& tokenizer) {
    if (tokens.empty()) throw DataError("language_fraction: empty token sequence");
    // word-level: a BPE piece can cover only part of a word, so decode the
    // whole sequence first and score whitespace-separated words
    std::string text = tokenizer.decode(tokens);
    int64_t total = 0, hits = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        size_t end = pos;
        while (end < text.size() && text[end] != ' ') ++end;
        if (end == pos) break;
        std::string word = text.substr(pos, end - pos);
        while (!word.empty() && word.back() == '.') word.pop_back();
        pos = end;
        if (word.empty()) continue;
        ++total;
        if (std::find(lang.vocabulary.begin(), lang.vocabulary.end(), word) !=
            lang.vocabulary.end())
            ++hits;
    }
    if (total == 0) return 0.0;
    return static_cast<double>(hits) / static_cast<double>(total);
}

SweepResult sweep_scaling(const lm::Model<float>& model,
                          const std::vector<std::vector<int>>& contexts,
                          const ControlVectorSet& vectors, const std::vector<double>& grid,
                          const corpus::LanguageSpec& target_lang,
                          const corpus::TokenizerModel& tokenizer,
                          const lm::DecodeConfig& decode) {
    if (grid.empty()) throw ConfigError("sweep_scaling: empty scale grid");
    if (contexts.empty()) throw DataError("sweep_scaling: no contexts");

    SweepResult result;
    for (double scale : grid) {
        ScaleScore score;
        score.scale = scale;
        double frac = 0, plaus = 0;
        for (const auto& ctx : contexts) {
            lm::GenerateResult gen;
            try {
                gen = lm::generate(model, ctx, decode, &vectors.vectors,
                                   static_cast<float>(scale));
            } catch (const std::exception& e) {
                throw NumericError("sweep_scaling: generation failed at scale " +
                                   std::to_string(scale) + ": " + e.what());
            }
            if (gen.tokens.empty())
                throw NumericError("sweep_scaling: empty generation at scale " +
                                   std::to_string(scale));
            frac += language_fraction(gen.tokens, target_lang, tokenizer);
            plaus += std::exp(lm::mean_logprob(model, ctx, gen.tokens));
        }
        score.target_fraction = frac / contexts.size();
        score.plausibility = plaus / contexts.size();
        score.combined = score.target_fraction * score.plausibility;
        result.scores.push_back(score);
    }
    // argmax combined; ties go to the smaller scale
    const ScaleScore* best = &result.scores[0];
    for (const auto& s : result.scores)
        if (s.combined > best->combined ||
            (s.combined == best->combined && s.scale < best->scale))
            best = &s;
    result.best_scale = best->scale;
    return result;
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write sweep csv: " + path);
    out << "scale,language_fraction,plausibility,combined\n";
    out.precision(10);
    for (const auto& s : result.scores)
        out << s.scale << "," << s.target_fraction << "," << s.plausibility << ","
            << s.combined << "\n";
}

}  // namespace xling::steer
