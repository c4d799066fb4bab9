// SPDX-License-Identifier: Apache-2.0
#include "xling/judge/judge.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "xling/util.hpp"

namespace xling::judge {

using json = nlohmann::json;

const char* metric_name(Metric m) { return m == Metric::Fluency ? "fluency" : "coherence"; }

Rubric fluency_rubric() {
    return Rubric{{
        "The text is grammatically malformed to the point of being incomprehensible "
        "(gibberish), is not in Finnish, or contains only a few Finnish words in a sea of "
        "another language.",
        "The text is understandable and mostly in Finnish, but contains many significant "
        "grammatical errors or words from other languages. Grammatical errors may include "
        "fundamentally wrong verb conjugations or noun inflections, severe phrasing issues, "
        "or highly repetitive words or phrases.",
        "The text is fully in Finnish and grammatically correct for the most part, but "
        "contains minor, non-critical errors. Examples include unnatural phrasing that "
        "suggests a literal translation from another language (calque), occasional incorrect "
        "word inflections, or awkward word choices.",
        "The text is fully in Finnish and grammatically perfect, idiomatic, and reads as if "
        "written by a native Finnish speaker. All word choices, inflections, and structures "
        "are natural.",
    }};
}

Rubric coherence_rubric() {
    return Rubric{{
        "The continuation is completely unrelated to the previous sentences with no "
        "semantically resembling words, concepts, or structure indicating of relatedness.",
        "The continuation is related to the overarching topic or themes of the previous "
        "sentences (e.g., 'dogs', 'shopping') but fails to connect to the specific events or "
        "characters of the sentences.",
        "The continuation correctly identifies and uses specific elements (characters, "
        "objects, locations) from the previous sentences. However, it contains some major "
        "logical inconsistencies, e.g., by mixing up the subject of some actions or "
        "presenting conflicting facts about the elements.",
        "The continuation provides a coherent continuation to the previous sentences without "
        "illogical or inconsistent elements.",
    }};
}

std::string JudgeClient::build_prompt(const JudgeRequest& request) {
    std::string p;
    p += "You are grading the ";
    p += metric_name(request.metric);
    p += " of a story continuation.\n\nStory context:\n";
    p += request.story_context;
    p += "\n\nContinuation:\n";
    p += request.completion;
    p += "\n\nMap the continuation to exactly one of the following categories:\n";
    for (int i = 0; i < 4; ++i) {
        p += std::to_string(i + 1);
        p += ". ";
        p += request.rubric.categories[i];
        p += "\n";
    }
    p += "\nReply with the category number (1, 2, 3 or 4) and nothing else.";
    return p;
}

uint64_t JudgeClient::request_hash(const JudgeRequest& request) {
    return fnv1a64(build_prompt(request));
}

JudgeClient::JudgeClient(Endpoint endpoint, std::string transcript_path, bool bypass_cache)
    : endpoint_(std::move(endpoint)),
      transcript_path_(std::move(transcript_path)),
      bypass_cache_(bypass_cache) {
    if (endpoint_.base_url.empty()) throw ConfigError("judge: endpoint base_url not configured");
}

std::string JudgeClient::post_once(const std::string& prompt, std::string& error_out) {
    error_out.clear();
    httplib::Client client(endpoint_.base_url);
    client.set_read_timeout(endpoint_.timeout_s, 0);
    client.set_connection_timeout(endpoint_.timeout_s, 0);

    json body;
    body["model"] = endpoint_.model;
    body["temperature"] = 0;
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});

    httplib::Headers headers;
    if (const char* key = std::getenv(endpoint_.credential_env.c_str()))
        headers.emplace("Authorization", std::string("Bearer ") + key);

    auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
        error_out = "connection failed: " + httplib::to_string(res.error());
        return "";
    }
    if (res->status != 200) {
        error_out = "http status " + std::to_string(res->status);
        return "";
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
        error_out = "malformed response body";
        return "";
    }
    try {
        return reply["choices"][0]["message"]["content"].get<std::string>();
    } catch (const std::exception&) {
        error_out = "malformed response body";
        return "";
    }
}

int JudgeClient::judge_completion(const JudgeRequest& request) {
    std::string prompt = build_prompt(request);
    uint64_t hash = fnv1a64(prompt);
    if (!bypass_cache_) {
        auto it = cache_.find(hash);
        if (it != cache_.end()) {
            ++cache_hits_;
            return it->second;
        }
    }

    std::string reply, error;
    bool got = false;
    for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(endpoint_.backoff_ms * (1 << (attempt - 1))));
        reply = post_once(prompt, error);
        if (error.empty()) {
            got = true;
            break;
        }
    }
    if (!got)
        throw ExternalError("judge: request failed after " +
                            std::to_string(endpoint_.max_retries + 1) + " attempts: " + error);

    std::string t = trim(reply);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
        throw DataError("judge: unparseable reply (expected a single integer): '" + reply + "'");
    int category = std::stoi(t);
    if (category < 1 || category > 4)
        throw DataError("judge: category out of range 1-4: " + t);

    cache_[hash] = category;
    if (!transcript_path_.empty()) {
        std::ofstream out(transcript_path_, std::ios::app);
        json rec{{"request_hash", to_hex(hash)},
                 {"metric", metric_name(request.metric)},
                 {"reply", reply},
                 {"category", category}};
        out << rec.dump() << "\n";
    }
    return category;
}

AggregateReport aggregate_scores(const std::map<std::string, std::vector<int>>& per_condition,
                                 const std::string& baseline_condition) {
    if (!per_condition.count(baseline_condition))
        throw DataError("aggregate_scores: baseline condition missing: " + baseline_condition);

    AggregateReport report;
    report.baseline_condition = baseline_condition;
    for (const auto& [condition, scores] : per_condition) {
        if (scores.empty())
            throw DataError("aggregate_scores: empty condition: " + condition);
        double mu = 0;
        for (int s : scores) mu += s;
        mu /= scores.size();
        double var = 0;
        for (int s : scores) var += (s - mu) * (s - mu);
        var /= scores.size();  // population variance
        report.aggregates.push_back(
            {condition, mu, std::sqrt(var), static_cast<int>(scores.size())});
    }
    double baseline_mu = 0;
    for (const auto& a : report.aggregates)
        if (a.condition == baseline_condition) baseline_mu = a.mu;
    for (const auto& a : report.aggregates)
        report.normalized_difference[a.condition] = baseline_mu - a.mu;
    return report;
}

}  // namespace xling::judge
