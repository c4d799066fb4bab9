// SPDX-License-Identifier: Apache-2.0
#include "xling/corpus/templates.hpp"

#include "xling/util.hpp"

namespace xling::corpus {

TemplateSet builtin_templates(const std::string& src_lang, const std::string& tgt_lang) {
    TemplateSet set;
    set.src_lang = src_lang;
    set.tgt_lang = tgt_lang;
    set.forward = {
        "Translate the {src_lang} sentence '{src}' into {tgt_lang}. {tgt_lang}: {tgt}.",
        "{src_lang}: {src} {tgt_lang}: {tgt}",
        "Translate to {tgt_lang}: {src} Translation: {tgt}",
        "The sentence '{src}' is written in {tgt_lang} as: {tgt}",
        "Q: How do you say '{src}' in {tgt_lang}? A: {tgt}",
        "{src} In {tgt_lang}: {tgt}",
        "Original ({src_lang}): {src} Rendered ({tgt_lang}): {tgt}",
        "Given the {src_lang} text '{src}', its {tgt_lang} translation is '{tgt}'.",
    };
    set.reverse = {
        "Translate the {tgt_lang} sentence '{tgt}' into {src_lang}. {src_lang}: {src}.",
        "{tgt_lang}: {tgt} {src_lang}: {src}",
        "Translate to {src_lang}: {tgt} Translation: {src}",
        "The sentence '{tgt}' is written in {src_lang} as: {src}",
        "Q: How do you say '{tgt}' in {src_lang}? A: {src}",
        "{tgt} In {src_lang}: {src}",
        "Original ({tgt_lang}): {tgt} Rendered ({src_lang}): {src}",
        "Given the {tgt_lang} text '{tgt}', its {src_lang} translation is '{src}'.",
    };
    return set;
}

std::string apply_template(const std::string& tmpl, const std::string& src, const std::string& tgt,
                           const std::string& src_lang, const std::string& tgt_lang) {
    std::string out;
    bool used_src = false, used_tgt = false;
    for (size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] != '{') {
            out += tmpl[i];
            continue;
        }
        auto close = tmpl.find('}', i);
        if (close == std::string::npos) throw DataError("template: unclosed placeholder");
        std::string name = tmpl.substr(i + 1, close - i - 1);
        if (name == "src") {
            out += src;
            used_src = true;
        } else if (name == "tgt") {
            out += tgt;
            used_tgt = true;
        } else if (name == "src_lang") {
            out += src_lang;
        } else if (name == "tgt_lang") {
            out += tgt_lang;
        } else {
            throw DataError("template: unknown placeholder {" + name + "}");
        }
        i = close;
    }
    if (!used_src || !used_tgt)
        throw DataError("template missing a sentence slot: " + tmpl);
    return out;
}

std::string format_parallel_pair(const ParallelPair& pair, const TemplateSet& templates,
                                 std::mt19937_64& rng) {
    if (pair.source.empty() || pair.target.empty())
        throw DataError("format_parallel_pair: empty pair side, pair id " +
                        std::to_string(pair.pair_id));
    size_t total = templates.size();
    if (total == 0) throw DataError("format_parallel_pair: empty template set");
    std::uniform_int_distribution<size_t> pick(0, total - 1);
    size_t k = pick(rng);
    const std::string& tmpl = k < templates.forward.size()
                                  ? templates.forward[k]
                                  : templates.reverse[k - templates.forward.size()];
    return apply_template(tmpl, pair.source, pair.target, templates.src_lang, templates.tgt_lang);
}

}  // namespace xling::corpus
