// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "xling/corpus/bpe.hpp"
#include "xling/corpus/synth.hpp"
#include "xling/lm/model.hpp"
#include "xling/steer/steer.hpp"
#include "xling/util.hpp"

using namespace xling;
using namespace xling::steer;

namespace {
probes::ActivationSet paired_set(int pairs, int taps, int dim) {
    probes::ActivationSet s;
    s.sentences = 2 * pairs;
    s.taps = taps;
    s.dim = dim;
    s.values.resize(size_t(s.sentences) * taps * dim);
    for (int i = 0; i < pairs; ++i) {
        s.labels.push_back("A");
        s.pair_ids.push_back(i);
    }
    for (int i = 0; i < pairs; ++i) {
        s.labels.push_back("B");
        s.pair_ids.push_back(i);
    }
    return s;
}
}  // namespace

TEST_CASE("control vectors are mean differences per tap") {
    const int pairs = 4, taps = 3, dim = 5;
    auto set = paired_set(pairs, taps, dim);
    // language A rows: value sent, language B rows: value sent + 10
    for (int sent = 0; sent < set.sentences; ++sent)
        for (int tap = 0; tap < taps; ++tap)
            for (int d = 0; d < dim; ++d)
                set.row(sent, tap)[d] = float(sent < pairs ? sent + tap : sent - pairs + 10 + tap);

    auto cv = build_control_vectors(set, "B", "unit-test");
    // one vector per block tap (taps 1..layers); tap 0 is pre-block
    REQUIRE(cv.vectors.size() == size_t(taps - 1));
    CHECK(cv.source_language == "A");
    CHECK(cv.target_language == "B");
    // mean(B) - mean(A) = 10 at every coordinate, independent of tap
    for (const auto& vec : cv.vectors)
        for (float v : vec) CHECK(v == doctest::Approx(10.0f));
}

TEST_CASE("control vectors round-trip through dumps") {
    auto set = paired_set(3, 3, 4);
    for (size_t i = 0; i < set.values.size(); ++i) set.values[i] = 0.1f * i;
    auto cv = build_control_vectors(set, "B", "prov");
    auto d = to_dump(cv);
    auto back = control_vectors_from_dump(d);
    CHECK(back.vectors == cv.vectors);
    CHECK(back.target_language == "B");
    CHECK(back.source_language == "A");
}

TEST_CASE("language fraction counts vocabulary hits") {
    auto lang = corpus::default_language_b(0);
    std::vector<std::string> corpus_texts;
    std::string joined;
    for (size_t i = 0; i < 8; ++i) joined += (i ? " " : "") + lang.vocabulary[i];
    corpus_texts.push_back(joined);
    corpus_texts.push_back("alpha beta gamma");
    auto tok = corpus::train_tokenizer(corpus_texts, 56);

    auto all_b = tok.encode(lang.vocabulary[0] + " " + lang.vocabulary[1]);
    CHECK(language_fraction(all_b, lang, tok) == doctest::Approx(1.0));

    auto none = tok.encode("alpha beta");
    CHECK(language_fraction(none, lang, tok) == doctest::Approx(0.0));
}

TEST_CASE("sweep prefers the smaller scale on ties") {
    // the tokenizer below has never seen the target language, so the target
    // fraction is 0 at every scale; all combined scores tie at zero and the
    // tie-break must pick the smallest scale in the grid
    auto set = paired_set(3, 3, 8);
    for (size_t i = 0; i < set.values.size(); ++i)
        set.values[i] = float((i * 2654435761u % 97) / 97.0 - 0.5);
    auto cv = build_control_vectors(set, "B", "");

    lm::ModelConfig mc;
    mc.layers = 2;
    mc.model_dim = 8;
    mc.heads = 2;
    mc.head_dim = 4;
    mc.mlp_hidden = 12;
    mc.vocab_size = 30;
    mc.context_len = 16;
    auto model = lm::init_model<float>(mc, 1);

    auto lang = corpus::default_language_b(0);
    auto tok = corpus::train_tokenizer({"alpha beta gamma delta"}, 30);
    lm::DecodeConfig dc;
    dc.max_new_tokens = 4;
    auto ctx = tok.encode("alpha beta");
    ctx.insert(ctx.begin(), corpus::TokenizerModel::kBosId);
    auto sweep = sweep_scaling(model, {ctx}, cv, {4.0, 1.0, 2.0}, lang, tok, dc);
    CHECK(sweep.best_scale == 1.0);
    for (const auto& s : sweep.scores) CHECK(s.combined == 0.0);
}

TEST_CASE("sweep csv is written with one row per scale") {
    SweepResult r;
    r.best_scale = 2.0;
    r.scores = {{0.0, 0.1, 0.5, 0.05}, {2.0, 0.9, 0.4, 0.36}};
    write_sweep_csv(r, "sweep_test.csv");
    std::ifstream in("sweep_test.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);  // header + 2 scales
    std::remove("sweep_test.csv");
}
