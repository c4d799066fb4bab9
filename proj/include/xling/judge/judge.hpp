// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace xling::judge {

enum class Metric { Fluency, Coherence };

const char* metric_name(Metric m);

// Four ordered categories, 1 = complete failure, 4 = perfectly valid.
struct Rubric {
    std::array<std::string, 4> categories;
};

Rubric fluency_rubric();
Rubric coherence_rubric();

struct JudgeRequest {
    std::string story_context;
    std::string completion;
    Metric metric = Metric::Fluency;
    Rubric rubric;
};

struct Endpoint {
    std::string base_url;  // e.g. http://localhost:8080
    std::string model;
    std::string credential_env = "XLING_JUDGE_API_KEY";
    int max_retries = 3;
    int backoff_ms = 200;
    int timeout_s = 60;
};

// Chat-completion client with deterministic prompts, bounded retries with
// backoff, and a request-hash response cache. Failure modes are distinct:
// ExternalError after exhausted retries, DataError for unparseable or
// out-of-range replies.
class JudgeClient {
public:
    JudgeClient(Endpoint endpoint, std::string transcript_path = "", bool bypass_cache = false);

    int judge_completion(const JudgeRequest& request);

    // Byte-stable for identical requests.
    static std::string build_prompt(const JudgeRequest& request);
    static uint64_t request_hash(const JudgeRequest& request);

    size_t cache_hits() const { return cache_hits_; }

private:
    Endpoint endpoint_;
    std::string transcript_path_;
    bool bypass_cache_;
    std::map<uint64_t, int> cache_;
    size_t cache_hits_ = 0;

    std::string post_once(const std::string& prompt, std::string& error_out);
};

struct JudgeAggregate {
    std::string condition;
    double mu = 0.0;
    double sigma = 0.0;  // population standard deviation
    int n = 0;
};

struct AggregateReport {
    std::vector<JudgeAggregate> aggregates;
    // baseline mu minus condition mu, keyed by condition
    std::map<std::string, double> normalized_difference;
    std::string baseline_condition;
};

AggregateReport aggregate_scores(const std::map<std::string, std::vector<int>>& per_condition,
                                 const std::string& baseline_condition);

}  // namespace xling::judge
