// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "xling/corpus/synth.hpp"

namespace xling::corpus {

// Instruction/completion formats for parallel pairs. Placeholders:
// {src}, {tgt}, {src_lang}, {tgt_lang}. Forward templates present the pair
// source-first; reverse templates flip the direction.
struct TemplateSet {
    std::vector<std::string> forward;
    std::vector<std::string> reverse;
    std::string src_lang = "English";
    std::string tgt_lang = "Finnish";

    size_t size() const { return forward.size() + reverse.size(); }
};

// Built-in set, 8 formats per direction.
TemplateSet builtin_templates(const std::string& src_lang = "English",
                              const std::string& tgt_lang = "Finnish");

// Fill one template; throws DataError when a required sentence slot is absent.
std::string apply_template(const std::string& tmpl, const std::string& src, const std::string& tgt,
                           const std::string& src_lang, const std::string& tgt_lang);

// Uniform draw over forward+reverse templates.
std::string format_parallel_pair(const ParallelPair& pair, const TemplateSet& templates,
                                 std::mt19937_64& rng);

}  // namespace xling::corpus
