// SPDX-License-Identifier: Apache-2.0
//
// xling: one binary for the whole experiment. Subcommands mirror the
// pipeline stages; `reproduce` runs everything from one config file.
//
// Exit codes: 0 ok, 1 unexpected, 2 config error, 3 data error,
// 4 numeric error, 5 external-service error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "xling/corpus/bpe.hpp"
#include "xling/corpus/mix.hpp"
#include "xling/corpus/pack.hpp"
#include "xling/corpus/synth.hpp"
#include "xling/corpus/templates.hpp"
#include "xling/judge/judge.hpp"
#include "xling/lm/checkpoint.hpp"
#include "xling/lm/generate.hpp"
#include "xling/metrics/metrics.hpp"
#include "xling/pipeline.hpp"
#include "xling/probes/activations.hpp"
#include "xling/probes/dump.hpp"
#include "xling/report/report.hpp"
#include "xling/steer/steer.hpp"
#include "xling/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xling;

namespace {

pipeline::ExperimentConfig load_experiment(const std::string& config_path) {
    if (config_path.empty()) return pipeline::ExperimentConfig{};
    return pipeline::ExperimentConfig::from_config(KeyValueConfig::parse_file(config_path));
}

probes::ActivationSet load_acts(const std::string& path) {
    return probes::activation_set_from_dump(probes::read_dump(path));
}

// eval sentences as used by `probe`: both sides of held-out pairs
void add_eval_rows(const corpus::Bitext& text, const corpus::TokenizerModel& tok,
                   const std::string& id_a, const std::string& id_b,
                   std::vector<std::vector<int>>& tokens, std::vector<std::string>& labels,
                   std::vector<int64_t>& pair_ids) {
    for (const auto& p : text.pairs) {
        tokens.push_back(tok.encode(p.source));
        labels.push_back(id_a);
        pair_ids.push_back(p.pair_id);
    }
    for (const auto& p : text.pairs) {
        tokens.push_back(tok.encode(p.target));
        labels.push_back(id_b);
        pair_ids.push_back(p.pair_id);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-lingual alignment lab"};
    app.require_subcommand(1);

    // ---- mix ----------------------------------------------------------------
    auto* mix_cmd = app.add_subcommand("mix", "print token budgets for a mixture");
    int64_t mix_total = 2'000'000;
    double mix_fraction = 0.01, mix_ratio = 0.5;
    mix_cmd->add_option("--total", mix_total, "total training tokens");
    mix_cmd->add_option("--fraction", mix_fraction, "parallel fraction of total");
    mix_cmd->add_option("--english-ratio", mix_ratio, "english share of total");

    // ---- gen-corpus ----------------------------------------------------------
    auto* gen_cmd = app.add_subcommand("gen-corpus", "generate the synthetic bitext corpus");
    std::string gen_out = "corpus";
    uint64_t gen_seed = 42;
    int64_t gen_pairs = 4000, gen_mono = 6000;
    int gen_words = 48;
    gen_cmd->add_option("--out", gen_out, "output directory");
    gen_cmd->add_option("--seed", gen_seed, "rng seed");
    gen_cmd->add_option("--pairs", gen_pairs, "parallel pair count");
    gen_cmd->add_option("--mono", gen_mono, "monolingual docs per language");
    gen_cmd->add_option("--words", gen_words, "vocabulary words per language");

    // ---- tokenize --------------------------------------------------------------
    auto* tok_cmd = app.add_subcommand("tokenize", "train a tokenizer or encode text");
    std::vector<std::string> tok_inputs;
    std::string tok_model = "tokenizer.model", tok_encode;
    int tok_vocab = 512;
    bool tok_train = false;
    tok_cmd->add_option("--input", tok_inputs, "training text files (one doc per line)");
    tok_cmd->add_option("--model", tok_model, "tokenizer model path");
    tok_cmd->add_option("--vocab-size", tok_vocab, "target vocabulary size");
    tok_cmd->add_flag("--train", tok_train, "train a new model from --input");
    tok_cmd->add_option("--encode", tok_encode, "encode one line and print ids");

    // ---- pack --------------------------------------------------------------
    auto* pack_cmd = app.add_subcommand("pack", "pack tokenized documents into chunks");
    std::string pack_input, pack_model, pack_out = "stream.chunks", pack_stream = "mono_a";
    int pack_ctx = 256;
    bool pack_parallel_fmt = false;
    pack_cmd->add_option("--input", pack_input, "text file, one doc (or src\\ttgt pair) per line")
        ->required();
    pack_cmd->add_option("--model", pack_model, "tokenizer model")->required();
    pack_cmd->add_option("--out", pack_out, "chunk file");
    pack_cmd->add_option("--stream", pack_stream, "mono_a | mono_b | parallel");
    pack_cmd->add_option("--context", pack_ctx, "context length");
    pack_cmd->add_flag("--format-pairs", pack_parallel_fmt,
                       "apply instruction templates to tsv pairs first");

    // ---- train / probe / analyze / steer / judge / report / reproduce ------
    auto* train_cmd = app.add_subcommand("train", "train a model on a packed mixture");
    std::string train_config, train_out = "run";
    double train_fraction = 0.01;
    train_cmd->add_option("--config", train_config, "experiment config file");
    train_cmd->add_option("--out", train_out, "run output directory");
    train_cmd->add_option("--fraction", train_fraction, "parallel fraction for this run");

    auto* probe_cmd = app.add_subcommand("probe", "extract activations from a checkpoint");
    std::string probe_ckpt, probe_tok, probe_pairs, probe_out = "probes";
    probe_cmd->add_option("--checkpoint", probe_ckpt)->required();
    probe_cmd->add_option("--tokenizer", probe_tok)->required();
    probe_cmd->add_option("--pairs", probe_pairs, "tsv of evaluation pairs")->required();
    probe_cmd->add_option("--out", probe_out, "output directory");

    auto* analyze_cmd = app.add_subcommand("analyze", "run one diagnostic on a dump");
    std::string an_kind, an_acts, an_neurons, an_out = "analysis";
    int an_tap = -1;
    analyze_cmd->add_option("kind", an_kind, "pca | cosine | pwcca | neurons")->required();
    analyze_cmd->add_option("--activations", an_acts, "activation dump");
    analyze_cmd->add_option("--neurons", an_neurons, "neuron dump");
    analyze_cmd->add_option("--tap", an_tap, "residual tap (pca; default last)");
    analyze_cmd->add_option("--out", an_out, "output directory");

    auto* steer_cmd = app.add_subcommand("steer", "build control vectors and sweep scales");
    std::string st_ckpt, st_tok, st_acts, st_pairs, st_out = "steer";
    std::vector<double> st_grid = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    int st_contexts = 8, st_max_new = 24;
    steer_cmd->add_option("--checkpoint", st_ckpt)->required();
    steer_cmd->add_option("--tokenizer", st_tok)->required();
    steer_cmd->add_option("--activations", st_acts, "activation dump")->required();
    steer_cmd->add_option("--pairs", st_pairs, "tsv pairs providing prompts")->required();
    steer_cmd->add_option("--scales", st_grid, "scale grid");
    steer_cmd->add_option("--contexts", st_contexts, "prompt count");
    steer_cmd->add_option("--max-new", st_max_new, "tokens generated per prompt");
    steer_cmd->add_option("--out", st_out, "output directory");

    auto* judge_cmd = app.add_subcommand("judge", "score completions with a chat-completions API");
    std::string jd_url, jd_model, jd_input, jd_out = "judge_scores.json", jd_metric = "fluency";
    std::string jd_transcript;
    judge_cmd->add_option("--base-url", jd_url)->required();
    judge_cmd->add_option("--model", jd_model)->required();
    judge_cmd->add_option("--input", jd_input,
                          "jsonl: {condition, context, completion} per line")
        ->required();
    judge_cmd->add_option("--metric", jd_metric, "fluency | coherence");
    judge_cmd->add_option("--out", jd_out, "aggregate output json");
    judge_cmd->add_option("--transcript", jd_transcript, "jsonl transcript path");

    auto* report_cmd = app.add_subcommand("report", "render charts from curve csv files");
    std::vector<std::string> rp_csvs;
    std::string rp_out = "report.svg", rp_title = "layer curves";
    report_cmd->add_option("--csv", rp_csvs, "curve csv files")->required();
    report_cmd->add_option("--out", rp_out, "svg path");
    report_cmd->add_option("--title", rp_title, "chart title");

    auto* repro_cmd = app.add_subcommand("reproduce", "run the full experiment");
    std::string rr_config, rr_out = "experiment";
    repro_cmd->add_option("--config", rr_config, "experiment config file");
    repro_cmd->add_option("--out", rr_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (mix_cmd->parsed()) {
            auto m = corpus::compute_mix(mix_total, mix_fraction, mix_ratio);
            std::printf("total    %lld\nenglish  %lld\nfinnish  %lld\nparallel %lld\n",
                        (long long)m.total_tokens, (long long)m.english_tokens,
                        (long long)m.finnish_tokens, (long long)m.parallel_tokens);
        } else if (gen_cmd->parsed()) {
            pipeline::ExperimentConfig cfg;
            cfg.seed = gen_seed;
            cfg.n_pairs = gen_pairs;
            cfg.n_mono = gen_mono;
            cfg.word_count = gen_words;
            auto bundle = pipeline::build_corpus(cfg);
            fs::create_directories(gen_out);
            corpus::save_monolingual(bundle.train_text.mono_a, gen_out + "/mono_a.txt");
            corpus::save_monolingual(bundle.train_text.mono_b, gen_out + "/mono_b.txt");
            corpus::save_parallel(bundle.train_text.pairs, gen_out + "/parallel.tsv");
            corpus::save_parallel(bundle.eval_text.pairs, gen_out + "/eval_parallel.tsv");
            std::printf("wrote corpus to %s\n", gen_out.c_str());
        } else if (tok_cmd->parsed()) {
            if (tok_train) {
                if (tok_inputs.empty()) throw ConfigError("tokenize --train needs --input");
                std::vector<std::string> texts;
                for (const auto& p : tok_inputs)
                    for (auto& d : corpus::load_monolingual(p)) texts.push_back(std::move(d));
                auto model = corpus::train_tokenizer(texts, tok_vocab);
                model.save(tok_model);
                std::printf("trained tokenizer, vocab %d -> %s\n", model.vocab_size(),
                            tok_model.c_str());
            }
            if (!tok_encode.empty()) {
                auto model = corpus::TokenizerModel::load(tok_model);
                for (int id : model.encode(tok_encode)) std::printf("%d ", id);
                std::printf("\n");
            }
        } else if (pack_cmd->parsed()) {
            auto model = corpus::TokenizerModel::load(pack_model);
            corpus::StreamId sid = pack_stream == "mono_b"   ? corpus::StreamId::MonoB
                                   : pack_stream == "parallel" ? corpus::StreamId::Parallel
                                                               : corpus::StreamId::MonoA;
            if (pack_stream != "mono_a" && pack_stream != "mono_b" && pack_stream != "parallel")
                throw ConfigError("unknown stream: " + pack_stream);
            std::vector<std::string> docs;
            if (pack_parallel_fmt) {
                auto pairs = corpus::load_parallel(pack_input);
                auto tmpl = corpus::builtin_templates();
                std::mt19937_64 rng(7);
                for (const auto& p : pairs)
                    docs.push_back(corpus::format_parallel_pair(p, tmpl, rng));
            } else {
                docs = corpus::load_monolingual(pack_input);
            }
            auto result = corpus::pack_chunks(
                pipeline::tokenize_sentences(docs, model), sid, pack_ctx,
                corpus::TokenizerModel::kBosId, corpus::TokenizerModel::kEosId,
                corpus::TokenizerModel::kPadId);
            corpus::save_chunks(result.chunks, pack_ctx, pack_out);
            std::printf("packed %zu chunks (+%zu tail tokens) -> %s\n", result.chunks.size(),
                        result.tail.size(), pack_out.c_str());
        } else if (train_cmd->parsed()) {
            auto cfg = load_experiment(train_config);
            cfg.parallel_fractions = {train_fraction};
            std::string report = pipeline::reproduce(cfg, train_out, std::cout);
            std::printf("done: %s\n", report.c_str());
        } else if (probe_cmd->parsed()) {
            auto ckpt = lm::load_checkpoint(probe_ckpt);
            auto tok = corpus::TokenizerModel::load(probe_tok);
            corpus::Bitext text;
            text.pairs = corpus::load_parallel(probe_pairs);
            std::vector<std::vector<int>> tokens;
            std::vector<std::string> labels;
            std::vector<int64_t> pair_ids;
            add_eval_rows(text, tok, "A", "B", tokens, labels, pair_ids);
            auto ext = probes::extract_all(ckpt.model, tokens, labels, pair_ids,
                                           {corpus::TokenizerModel::kPadId,
                                            corpus::TokenizerModel::kBosId,
                                            corpus::TokenizerModel::kEosId});
            fs::create_directories(probe_out);
            probes::write_dump(probes::to_dump(ext.activations), probe_out + "/acts.dump");
            probes::write_dump(probes::to_dump(ext.neurons), probe_out + "/neurons.dump");
            std::printf("wrote %s/{acts,neurons}.dump\n", probe_out.c_str());
        } else if (analyze_cmd->parsed()) {
            metrics::AnalysisConfig acfg;
            fs::create_directories(an_out);
            if (an_kind == "pca") {
                auto acts = load_acts(an_acts);
                int tap = an_tap < 0 ? acts.taps - 1 : an_tap;
                auto proj = metrics::pca_project2(acts, tap);
                std::ofstream out(an_out + "/pca_tap" + std::to_string(tap) + ".csv");
                out << "label,pc1,pc2\n";
                for (size_t i = 0; i < proj.labels.size(); ++i)
                    out << proj.labels[i] << "," << proj.coords[2 * i] << ","
                        << proj.coords[2 * i + 1] << "\n";
                std::printf("tap %d overlap statistic %.4f, explained %.3f/%.3f\n", tap,
                            proj.overlap_statistic, proj.explained_variance[0],
                            proj.explained_variance[1]);
            } else if (an_kind == "cosine") {
                auto curves = metrics::cosine_curves(load_acts(an_acts), acfg);
                metrics::LayerCurve merged{"cosine", curves.translation.values,
                                           curves.random_baseline.values};
                report::write_curve_csv(merged, an_out + "/cosine.csv");
                std::printf("wrote %s/cosine.csv\n", an_out.c_str());
            } else if (an_kind == "pwcca") {
                auto acts = load_acts(an_acts);
                auto curve = metrics::pwcca_curve(acts, acfg, false);
                auto shuffled = metrics::pwcca_curve(acts, acfg, true);
                metrics::LayerCurve merged{"pwcca", curve.values, shuffled.values};
                report::write_curve_csv(merged, an_out + "/pwcca.csv");
                std::printf("wrote %s/pwcca.csv\n", an_out.c_str());
            } else if (an_kind == "neurons") {
                auto table = metrics::score_neurons(
                    probes::neuron_table_from_dump(probes::read_dump(an_neurons)));
                auto buckets = metrics::threshold_buckets(table, acfg);
                std::ofstream out(an_out + "/neurons.csv");
                out << "threshold,count_" << table.language_a << ",count_" << table.language_b
                    << "\n";
                for (size_t i = 0; i < buckets.thresholds.size(); ++i)
                    out << buckets.thresholds[i] << "," << buckets.counts_a[i] << ","
                        << buckets.counts_b[i] << "\n";
                std::printf("shared (both AP <= %.2f): %lld\n", acfg.shared_threshold,
                            (long long)buckets.shared);
            } else {
                throw ConfigError("unknown analyze kind: " + an_kind);
            }
        } else if (steer_cmd->parsed()) {
            auto ckpt = lm::load_checkpoint(st_ckpt);
            auto tok = corpus::TokenizerModel::load(st_tok);
            auto acts = load_acts(st_acts);
            auto pairs = corpus::load_parallel(st_pairs);
            corpus::LanguageSpec target = corpus::default_language_b(0);
            // target language id must match the activation labels
            for (const auto& l : acts.labels)
                if (l == target.id) break;
            auto vectors = steer::build_control_vectors(acts, target.id, st_acts);
            fs::create_directories(st_out);
            probes::write_dump(steer::to_dump(vectors), st_out + "/control_vectors.dump");
            std::vector<std::vector<int>> contexts;
            for (int i = 0; i < st_contexts && i < (int)pairs.size(); ++i) {
                auto t = tok.encode(pairs[i].source);
                t.insert(t.begin(), corpus::TokenizerModel::kBosId);
                contexts.push_back(std::move(t));
            }
            lm::DecodeConfig decode;
            decode.max_new_tokens = st_max_new;
            auto sweep =
                steer::sweep_scaling(ckpt.model, contexts, vectors, st_grid, target, tok, decode);
            steer::write_sweep_csv(sweep, st_out + "/sweep.csv");
            std::printf("best scale %.3f -> %s/sweep.csv\n", sweep.best_scale, st_out.c_str());
        } else if (judge_cmd->parsed()) {
            judge::Endpoint ep;
            ep.base_url = jd_url;
            ep.model = jd_model;
            judge::JudgeClient client(ep, jd_transcript);
            judge::Metric metric =
                jd_metric == "coherence" ? judge::Metric::Coherence : judge::Metric::Fluency;
            if (jd_metric != "fluency" && jd_metric != "coherence")
                throw ConfigError("unknown metric: " + jd_metric);
            std::ifstream in(jd_input);
            if (!in) throw DataError("cannot open " + jd_input);
            std::map<std::string, std::vector<int>> per_condition;
            std::string line, baseline;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                json j = json::parse(line);
                judge::JudgeRequest req;
                req.story_context = j.at("context").get<std::string>();
                req.completion = j.at("completion").get<std::string>();
                req.metric = metric;
                req.rubric = metric == judge::Metric::Fluency ? judge::fluency_rubric()
                                                              : judge::coherence_rubric();
                std::string cond = j.at("condition").get<std::string>();
                if (baseline.empty()) baseline = cond;
                if (j.value("baseline", false)) baseline = cond;
                per_condition[cond].push_back(client.judge_completion(req));
            }
            if (per_condition.empty()) throw DataError("no judge inputs in " + jd_input);
            auto agg = judge::aggregate_scores(per_condition, baseline);
            json out;
            out["baseline"] = agg.baseline_condition;
            for (const auto& a : agg.aggregates)
                out["conditions"][a.condition] = {{"mu", a.mu}, {"sigma", a.sigma}, {"n", a.n}};
            for (const auto& [cond, d] : agg.normalized_difference)
                out["normalized_difference"][cond] = d;
            out["cache_hits"] = client.cache_hits();
            std::ofstream os(jd_out);
            os << out.dump(2) << "\n";
            std::printf("wrote %s\n", jd_out.c_str());
        } else if (report_cmd->parsed()) {
            std::vector<report::SvgSeries> series;
            for (const auto& path : rp_csvs) {
                auto curve = report::read_curve_csv(path);
                series.push_back({curve.metric.empty() ? path : curve.metric, curve.values});
                if (!curve.baseline.empty())
                    series.push_back({path + " baseline", curve.baseline});
            }
            report::write_svg_chart(rp_title, series, rp_out);
            std::printf("wrote %s\n", rp_out.c_str());
        } else if (repro_cmd->parsed()) {
            auto cfg = load_experiment(rr_config);
            std::string report = pipeline::reproduce(cfg, rr_out, std::cout);
            std::printf("done: %s\n", report.c_str());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const ExternalError& e) {
        std::fprintf(stderr, "external error: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
