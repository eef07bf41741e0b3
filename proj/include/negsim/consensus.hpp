#pragma once

// Turn-indexed attitude tracking and pairwise agreement judging, reduced to
// a group consensus series.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "negsim/call_site.hpp"
#include "negsim/types.hpp"

namespace negsim {

/// topic id -> stance; nullopt is "No Mention".
using AttitudeMap = std::map<std::string, std::optional<std::string>>;

/// Dense attitude table: rows[t][party * topics + topic], t = 0..T. An empty
/// string is the uninitialised value.
struct AttitudeState {
    std::vector<std::string> parties;
    std::vector<std::string> topics;
    std::vector<std::vector<std::string>> rows;

    std::size_t turns() const noexcept { return rows.empty() ? 0 : rows.size() - 1; }
    const std::string& at(std::size_t turn, std::size_t party, std::size_t topic) const;
    const std::string& at(std::size_t turn, std::string_view party, std::string_view topic) const;
};

/// Turn-0 row: each party's rendered preference profile per topic.
AttitudeState initial_attitude_state(const Scenario& s);

/// Appends row `turn.index`: the speaker's mentioned topics take the new
/// stance, every other cell repeats the previous row. Mediator and stall
/// turns copy the previous row unchanged.
AttitudeState update_attitude_state(AttitudeState state, const Turn& turn, const AttitudeMap& extracted);

/// One entry per scenario topic. Unusable judge output after one retry gives
/// an all-"No Mention" map with a warning.
AttitudeMap extract_attitudes(const CallSite& site, const Utterance& utterance, const Scenario& s,
                              const ConversationContext& history);

struct AgreementJudgment {
    std::array<double, 5> dims{};
    double overall = 0.0;  // always the mean of dims
    std::string reasoning;
    bool missing = false;  // judge output unusable; excluded from means
};

double mean_of(const std::array<double, 5>& dims);

/// Builds a judgment from judge dims, recomputing overall locally. A judge
/// overall that differs from the mean by more than 1e-6 is logged.
AgreementJudgment make_judgment(const std::array<double, 5>& dims, std::optional<double> judge_overall,
                                std::string reasoning, Diagnostics* diag = nullptr);

enum class ScoringVariant { MultiDimension, SingleDimension };

struct ConsensusOptions {
    ScoringVariant variant = ScoringVariant::MultiDimension;
    bool condition_on_previous = false;  // show the judge the pair's previous overall
};

/// Empty attitude on either side scores zero on every dimension without a
/// judge call. `previous` is only used with condition_on_previous.
AgreementJudgment score_agreement(const CallSite& site, const std::string& a, const std::string& b, const Scenario& s,
                                  const Topic& topic, const ConsensusOptions& options = {},
                                  std::optional<double> previous = std::nullopt);

struct AgreementRecord {
    std::string party_a;  // earlier in declaration order
    std::string party_b;
    std::string topic;
    int turn = 0;         // the turn this record stands for
    int judged_turn = 0;  // the turn the judgment was produced at (< turn when carried forward)
    AgreementJudgment judgment;
};

struct ConsensusSeries {
    std::vector<std::string> parties;
    std::vector<std::string> topics;
    std::vector<double> g;                    // size T+1
    std::vector<std::vector<double>> g_topic;  // [topic][t]
    std::vector<std::vector<int>> mentions;    // [topic][t], 0 or 1; row 0 is always 0
    std::vector<std::vector<AgreementRecord>> records;  // [t][pair * topics + topic]

    std::size_t turns() const noexcept { return g.empty() ? 0 : g.size() - 1; }
    std::size_t pair_count() const noexcept { return parties.size() * (parties.size() - 1) / 2; }
    std::size_t topic_index(std::string_view topic) const;  // npos when absent
    int mention_count(std::size_t topic) const;
};

/// Unordered pairs in declaration order: (0,1), (0,2), ..., (1,2), ...
std::vector<std::pair<std::size_t, std::size_t>> party_pairs(std::size_t n);

// ---------------------------------------------------------------------------
// Judgment cache: the contract between simulation and evaluation.

class CacheMiss : public Error {
public:
    explicit CacheMiss(const std::string& key) : Error(ErrorKind::CacheMiss, "CacheMiss: " + key), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct MiJudgment {
    std::array<int, 4> scores{-1, -1, -1, -1};
    std::array<std::string, 4> reasoning;
    bool failed = false;
};

class JudgmentCache {
public:
    using AttitudeKey = std::tuple<std::string, int, std::string>;  // run, turn, party
    using AgreementKey = std::tuple<std::string, int, std::string, std::string, std::string>;  // run, turn, a, b, topic
    using MiKey = std::tuple<std::string, int>;

    void put_attitudes(const AttitudeKey& key, AttitudeMap value) { attitudes_[key] = std::move(value); }
    void put_agreement(const AgreementKey& key, AgreementJudgment value) { agreements_[key] = std::move(value); }
    void put_mi(const MiKey& key, MiJudgment value) { mi_[key] = std::move(value); }

    const AttitudeMap* find_attitudes(const AttitudeKey& key) const;
    const AgreementJudgment* find_agreement(const AgreementKey& key) const;
    const MiJudgment* find_mi(const MiKey& key) const;

    std::size_t size() const noexcept { return attitudes_.size() + agreements_.size() + mi_.size(); }
    void merge(const JudgmentCache& other);

    /// Deterministic JSONL: attitudes, agreements, then MI records, each in
    /// key order.
    std::string serialize() const;
    static JudgmentCache parse(std::string_view text);
    static JudgmentCache load(const std::filesystem::path& path);  // missing file -> empty cache
    void save(const std::filesystem::path& path) const;

    static std::string describe(const AttitudeKey& key);
    static std::string describe(const AgreementKey& key);
    static std::string describe(const MiKey& key);

private:
    std::map<AttitudeKey, AttitudeMap> attitudes_;
    std::map<AgreementKey, AgreementJudgment> agreements_;
    std::map<MiKey, MiJudgment> mi_;
};

/// Source of judgments for one transcript. Every answer is recorded into
/// `cache()` so later evaluations can replay it.
class JudgmentSource {
public:
    virtual ~JudgmentSource() = default;
    virtual AttitudeMap attitudes(const Transcript& tr, const Turn& turn, const ConversationContext& history) = 0;
    virtual AgreementJudgment agreement(const Transcript& tr, int turn, const std::string& a, const std::string& b,
                                        const Topic& topic, const std::string& attitude_a,
                                        const std::string& attitude_b, std::optional<double> previous) = 0;
    virtual MiJudgment mediator_intelligence(const Transcript& tr, const Turn& turn,
                                             const ConversationContext& prior) = 0;
    virtual JudgmentCache& cache() = 0;
};

/// Cache first, then the judge backend (when `site.gateway` is set). With no
/// gateway a miss throws CacheMiss.
class CachingJudge final : public JudgmentSource {
public:
    CachingJudge(CallSite site, JudgmentCache cache = {}, ConsensusOptions options = {});

    AttitudeMap attitudes(const Transcript& tr, const Turn& turn, const ConversationContext& history) override;
    AgreementJudgment agreement(const Transcript& tr, int turn, const std::string& a, const std::string& b,
                                const Topic& topic, const std::string& attitude_a, const std::string& attitude_b,
                                std::optional<double> previous) override;
    MiJudgment mediator_intelligence(const Transcript& tr, const Turn& turn,
                                     const ConversationContext& prior) override;
    JudgmentCache& cache() override { return cache_; }

    std::size_t judge_calls() const noexcept { return judge_calls_; }

private:
    CallSite site_;
    JudgmentCache cache_;
    ConsensusOptions options_;
    std::size_t judge_calls_ = 0;
};

/// MI judge call for one intervention: four scores, -1 meaning not
/// applicable. Unusable output after one retry is all not-applicable.
MiJudgment judge_mediator_intelligence(const CallSite& site, const Utterance& speech,
                                       const ConversationContext& prior);

/// Algorithm: baseline from the initial attitudes (every pair and topic
/// judged), then per participant turn extract the speaker's attitudes and
/// re-judge the speaker's pairs on every topic. Other pairs, mediator turns
/// and stalls carry the previous records forward. A failed judgment carries
/// the previous record forward; with no previous record it is excluded.
ConsensusSeries track_consensus(const Transcript& tr, const Scenario& s, JudgmentSource& judge,
                                AttitudeState* state_out = nullptr);

/// Strict replay: every judgment must come from `cache`.
ConsensusSeries replay_judgments(const Transcript& tr, const JudgmentCache& cache,
                                 const ConsensusOptions& options = {});

}  // namespace negsim
