// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "xling/pipeline.hpp"
#include "xling/util.hpp"

namespace fs = std::filesystem;
using namespace xling;
using namespace xling::pipeline;

namespace {

ExperimentConfig micro_config() {
    auto kv = KeyValueConfig::parse_string(
        "experiment.seed = 7\n"
        "mix.total_tokens = 30000\n"
        "mix.parallel_fractions = 0.05\n"
        "corpus.pairs = 200\n"
        "corpus.mono_docs = 250\n"
        "tokenizer.vocab_size = 200\n"
        "model.layers = 2\n"
        "model.dim = 32\n"
        "model.heads = 2\n"
        "model.mlp_hidden = 64\n"
        "model.context_len = 128\n"
        "train.batch_size = 4\n"
        "train.steps = 20\n"
        "train.warmup_steps = 4\n"
        "train.checkpoint_every = 10\n"
        "eval.pairs = 24\n"
        "steer.contexts = 2\n"
        "steer.max_new_tokens = 6\n"
        "steer.scales = 0,2\n");
    return ExperimentConfig::from_config(kv);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// byte-compare two directory trees
void check_trees_equal(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
    CHECK(!rel.empty());
    size_t count_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) ++count_b;
    CHECK(count_b == rel.size());
    for (const auto& r : rel) {
        INFO("file ", r.string());
        REQUIRE(fs::exists(b / r));
        CHECK(slurp(a / r) == slurp(b / r));
    }
}

}  // namespace

TEST_CASE("experiment config round-trips through key-value form") {
    auto cfg = micro_config();
    auto kv = cfg.to_config();
    auto back = ExperimentConfig::from_config(kv);
    CHECK(back.config_hash() == cfg.config_hash());
    CHECK(back.seed == cfg.seed);
    CHECK(back.parallel_fractions == cfg.parallel_fractions);
    CHECK(back.model.layers == cfg.model.layers);
    CHECK(back.train.steps == cfg.train.steps);
}

TEST_CASE("fraction labels are filesystem safe") {
    CHECK(fraction_label(0.0) == "frac_0");
    CHECK(fraction_label(0.01) == "frac_1");
    CHECK(fraction_label(0.05) == "frac_5");
    CHECK(fraction_label(0.005) == "frac_0p5");
}

TEST_CASE("invalid configs are rejected up front") {
    auto kv = KeyValueConfig::parse_string("mix.parallel_fractions = 0.5,1.5\n");
    CHECK_THROWS_AS(ExperimentConfig::from_config(kv), ConfigError);
    auto kv2 = KeyValueConfig::parse_string("judge.enabled = true\n");
    CHECK_THROWS_AS(ExperimentConfig::from_config(kv2), ConfigError);
    auto kv3 = KeyValueConfig::parse_string("model.dim = 33\nmodel.heads = 2\n");
    CHECK_THROWS_AS(ExperimentConfig::from_config(kv3), ConfigError);
}

TEST_CASE("reproduce runs end to end and is byte deterministic") {
    auto cfg = micro_config();
    fs::path dir_a = "repro_a", dir_b = "repro_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    std::ostringstream log;
    auto report_a = reproduce(cfg, dir_a.string(), log);
    CHECK(fs::exists(report_a));
    CHECK(fs::exists(dir_a / "tokenizer.model"));
    CHECK(fs::exists(dir_a / "runs/frac_5/loss.csv"));
    CHECK(fs::exists(dir_a / "analysis/frac_5/pwcca.csv"));
    CHECK(fs::exists(dir_a / "analysis/frac_5/cosine.svg"));
    CHECK(fs::exists(dir_a / "steer/frac_5/sweep.csv"));

    // a second full run from scratch produces identical bytes everywhere
    reproduce(cfg, dir_b.string(), log);
    check_trees_equal(dir_a, dir_b);

    // deleting the analysis/report artifacts and rerunning restores them
    fs::remove_all(dir_a / "report");
    fs::remove_all(dir_a / "analysis");
    reproduce(cfg, dir_a.string(), log);
    check_trees_equal(dir_a, dir_b);

    // mismatched config in an existing directory is refused
    auto other = cfg;
    other.seed = 8;
    CHECK_THROWS_AS(reproduce(other, dir_a.string(), log), ConfigError);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}
