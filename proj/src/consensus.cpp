#include "negsim/consensus.hpp"

#include <cmath>
#include <sstream>

#include "json_util.hpp"
#include "negsim/mediator.hpp"

namespace negsim {

using detail::json;

// ---------------------------------------------------------------------------
// Attitude state

const std::string& AttitudeState::at(std::size_t turn, std::size_t party, std::size_t topic) const {
    return rows.at(turn).at(party * topics.size() + topic);
}

const std::string& AttitudeState::at(std::size_t turn, std::string_view party, std::string_view topic) const {
    auto p = std::find(parties.begin(), parties.end(), party);
    auto t = std::find(topics.begin(), topics.end(), topic);
    if (p == parties.end() || t == topics.end())
        throw DomainError("unknown attitude cell " + std::string(party) + "/" + std::string(topic));
    return at(turn, static_cast<std::size_t>(p - parties.begin()), static_cast<std::size_t>(t - topics.begin()));
}

AttitudeState initial_attitude_state(const Scenario& s) {
    AttitudeState st;
    for (const auto& p : s.parties) st.parties.push_back(p.id);
    for (const auto& t : s.topics) st.topics.push_back(t.id);
    std::vector<std::string> row;
    row.reserve(st.parties.size() * st.topics.size());
    for (const auto& p : s.parties) {
        for (const auto& t : s.topics) {
            auto it = p.preferences.find(t.id);
            row.push_back(it == p.preferences.end() ? std::string{} : render_preference_attitude(t, it->second));
        }
    }
    st.rows.push_back(std::move(row));
    return st;
}

AttitudeState update_attitude_state(AttitudeState state, const Turn& turn, const AttitudeMap& extracted) {
    if (state.rows.empty()) throw DomainError("attitude state has no baseline row");
    if (static_cast<std::size_t>(turn.index) != state.rows.size())
        throw DomainError("attitude state is dense through turn " + std::to_string(state.rows.size() - 1) +
                          ", cannot append turn " + std::to_string(turn.index));
    std::vector<std::string> row = state.rows.back();
    if (turn.kind == TurnKind::Participant) {
        auto p = std::find(state.parties.begin(), state.parties.end(), turn.speaker);
        if (p != state.parties.end()) {
            std::size_t pi = static_cast<std::size_t>(p - state.parties.begin());
            for (std::size_t ti = 0; ti < state.topics.size(); ++ti) {
                auto it = extracted.find(state.topics[ti]);
                if (it != extracted.end() && it->second) row[pi * state.topics.size() + ti] = *it->second;
            }
        }
    }
    state.rows.push_back(std::move(row));
    return state;
}

namespace {

std::string render_topics_with_options(const Scenario& s) {
    std::ostringstream ss;
    for (const auto& t : s.topics) {
        ss << "- " << t.id << " (" << t.title << ")";
        if (!t.options.empty()) {
            ss << "; options:";
            for (const auto& o : t.options) ss << " (" << o.id << ") " << o.description << ";";
        }
        ss << "\n";
    }
    return ss.str();
}

AttitudeMap no_mention_map(const Scenario& s) {
    AttitudeMap m;
    for (const auto& t : s.topics) m[t.id] = std::nullopt;
    return m;
}

}  // namespace

AttitudeMap extract_attitudes(const CallSite& site, const Utterance& utterance, const Scenario& s,
                              const ConversationContext& history) {
    TemplateVars vars{{"speaker", display_name(s, utterance.speaker)},
                      {"speech", utterance.text},
                      {"topics", render_topics_with_options(s)},
                      {"history", render_history(history)}};
    auto reply = call_structured<AttitudeMapReply>(site, CallTag::AttitudeExtract, Shape::AttitudeMap, "",
                                                   site.prompts->render("attitude_extract", vars));
    AttitudeMap out = no_mention_map(s);
    if (!reply) {
        site.warn("attitude extraction failed for " + utterance.speaker + "; treating every topic as not mentioned");
        return out;
    }
    for (const auto& [key, stance] : reply->attitudes) {
        auto id = resolve_topic(s, key);
        if (!id) {
            site.warn("attitude extraction returned unknown topic '" + key + "'");
            continue;
        }
        if (stance) out[*id] = stance;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Agreement

double mean_of(const std::array<double, 5>& dims) {
    double sum = 0.0;
    for (double d : dims) sum += d;
    return sum / 5.0;
}

AgreementJudgment make_judgment(const std::array<double, 5>& dims, std::optional<double> judge_overall,
                                std::string reasoning, Diagnostics* diag) {
    AgreementJudgment j;
    j.dims = dims;
    j.overall = mean_of(dims);
    j.reasoning = std::move(reasoning);
    if (judge_overall && diag && std::fabs(*judge_overall - j.overall) > 1e-6)
        diag->warn("judge overall " + json(*judge_overall).dump() + " differs from dimension mean " +
                   json(j.overall).dump());
    return j;
}

AgreementJudgment score_agreement(const CallSite& site, const std::string& a, const std::string& b, const Scenario& s,
                                  const Topic& topic, const ConsensusOptions& options,
                                  std::optional<double> previous) {
    if (a.empty() || b.empty()) return AgreementJudgment{};
    TemplateVars vars{{"context", render_overall_context(s)},
                      {"topic", topic.title + " [" + topic.id + "]"},
                      {"attitude_a", a},
                      {"attitude_b", b},
                      {"previous", options.condition_on_previous && previous
                                       ? "The previous consensus score for this pair on this topic was " +
                                             json(*previous).dump() + "."
                                       : std::string{}}};
    if (options.variant == ScoringVariant::SingleDimension) {
        auto reply = call_structured<SingleAgreementReply>(site, CallTag::AgreementJudge, Shape::SingleAgreement, "",
                                                           site.prompts->render("agreement_judge_single", vars));
        if (!reply) {
            AgreementJudgment j;
            j.missing = true;
            return j;
        }
        std::array<double, 5> dims;
        dims.fill(reply->score);
        return make_judgment(dims, std::nullopt, reply->reasoning, site.diagnostics());
    }
    auto reply = call_structured<AgreementScoresReply>(site, CallTag::AgreementJudge, Shape::AgreementScores, "",
                                                       site.prompts->render("agreement_judge", vars));
    if (!reply) {
        AgreementJudgment j;
        j.missing = true;
        return j;
    }
    return make_judgment(reply->dims, reply->judge_overall, reply->reasoning, site.diagnostics());
}

std::size_t ConsensusSeries::topic_index(std::string_view topic) const {
    auto it = std::find(topics.begin(), topics.end(), topic);
    return it == topics.end() ? std::string::npos : static_cast<std::size_t>(it - topics.begin());
}

int ConsensusSeries::mention_count(std::size_t topic) const {
    int n = 0;
    for (int m : mentions.at(topic)) n += m;
    return n;
}

std::vector<std::pair<std::size_t, std::size_t>> party_pairs(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Cache

const AttitudeMap* JudgmentCache::find_attitudes(const AttitudeKey& key) const {
    auto it = attitudes_.find(key);
    return it == attitudes_.end() ? nullptr : &it->second;
}

const AgreementJudgment* JudgmentCache::find_agreement(const AgreementKey& key) const {
    auto it = agreements_.find(key);
    return it == agreements_.end() ? nullptr : &it->second;
}

const MiJudgment* JudgmentCache::find_mi(const MiKey& key) const {
    auto it = mi_.find(key);
    return it == mi_.end() ? nullptr : &it->second;
}

void JudgmentCache::merge(const JudgmentCache& other) {
    for (const auto& [k, v] : other.attitudes_) attitudes_[k] = v;
    for (const auto& [k, v] : other.agreements_) agreements_[k] = v;
    for (const auto& [k, v] : other.mi_) mi_[k] = v;
}

std::string JudgmentCache::describe(const AttitudeKey& k) {
    return "attitude(run=" + std::get<0>(k) + ", turn=" + std::to_string(std::get<1>(k)) + ", party=" +
           std::get<2>(k) + ")";
}

std::string JudgmentCache::describe(const AgreementKey& k) {
    return "agreement(run=" + std::get<0>(k) + ", turn=" + std::to_string(std::get<1>(k)) + ", pair=" +
           std::get<2>(k) + "|" + std::get<3>(k) + ", topic=" + std::get<4>(k) + ")";
}

std::string JudgmentCache::describe(const MiKey& k) {
    return "mi(run=" + std::get<0>(k) + ", turn=" + std::to_string(std::get<1>(k)) + ")";
}

std::string JudgmentCache::serialize() const {
    std::string out;
    for (const auto& [k, v] : attitudes_) {
        json att = json::object();
        for (const auto& [topic, stance] : v) att[topic] = stance ? json(*stance) : json(nullptr);
        out += detail::jsonl_line(json{{"kind", "attitude"},
                                       {"run", std::get<0>(k)},
                                       {"turn", std::get<1>(k)},
                                       {"party", std::get<2>(k)},
                                       {"attitudes", att}});
    }
    for (const auto& [k, v] : agreements_) {
        out += detail::jsonl_line(json{{"kind", "agreement"},
                                       {"run", std::get<0>(k)},
                                       {"turn", std::get<1>(k)},
                                       {"a", std::get<2>(k)},
                                       {"b", std::get<3>(k)},
                                       {"topic", std::get<4>(k)},
                                       {"dims", v.dims},
                                       {"overall", v.overall},
                                       {"reasoning", v.reasoning},
                                       {"missing", v.missing}});
    }
    for (const auto& [k, v] : mi_) {
        out += detail::jsonl_line(json{{"kind", "mi"},
                                       {"run", std::get<0>(k)},
                                       {"turn", std::get<1>(k)},
                                       {"scores", v.scores},
                                       {"reasoning", v.reasoning},
                                       {"failed", v.failed}});
    }
    return out;
}

JudgmentCache JudgmentCache::parse(std::string_view text) {
    JudgmentCache cache;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        std::string where = "line " + std::to_string(line_no);
        try {
            json rec = json::parse(line);
            std::string kind = rec.at("kind").get<std::string>();
            std::string run = rec.at("run").get<std::string>();
            int turn = rec.at("turn").get<int>();
            if (kind == "attitude") {
                AttitudeMap m;
                for (auto it = rec.at("attitudes").begin(); it != rec.at("attitudes").end(); ++it)
                    m[it.key()] = it->is_null() ? std::nullopt : std::optional<std::string>(it->get<std::string>());
                cache.put_attitudes({run, turn, rec.at("party").get<std::string>()}, std::move(m));
            } else if (kind == "agreement") {
                AgreementJudgment j;
                j.dims = rec.at("dims").get<std::array<double, 5>>();
                j.overall = mean_of(j.dims);
                j.reasoning = rec.value("reasoning", std::string{});
                j.missing = rec.value("missing", false);
                if (j.missing) j.overall = 0.0;
                cache.put_agreement({run, turn, rec.at("a").get<std::string>(), rec.at("b").get<std::string>(),
                                     rec.at("topic").get<std::string>()},
                                    std::move(j));
            } else if (kind == "mi") {
                MiJudgment m;
                m.scores = rec.at("scores").get<std::array<int, 4>>();
                if (auto it = rec.find("reasoning"); it != rec.end())
                    m.reasoning = it->get<std::array<std::string, 4>>();
                m.failed = rec.value("failed", false);
                cache.put_mi({run, turn}, std::move(m));
            } else {
                throw ParseError(where, "unknown cache record kind '" + kind + "'");
            }
        } catch (const json::exception& e) {
            throw ParseError(where, e.what());
        }
    }
    return cache;
}

JudgmentCache JudgmentCache::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return parse(detail::read_file(path));
}

void JudgmentCache::save(const std::filesystem::path& path) const { detail::write_file(path, serialize()); }

// ---------------------------------------------------------------------------
// Judges

MiJudgment judge_mediator_intelligence(const CallSite& site, const Utterance& speech,
                                       const ConversationContext& prior) {
    TemplateVars vars{{"history", render_history(prior)}, {"speech", speech.text}};
    auto reply = call_structured<MiScoresReply>(site, CallTag::MiJudge, Shape::MiScores, "",
                                                site.prompts->render("mi_judge", vars));
    MiJudgment m;
    if (!reply) {
        site.warn("MI judgment failed at turn " + std::to_string(prior.turn_index) + "; all dimensions not applicable");
        m.failed = true;
        return m;
    }
    m.scores = reply->scores;
    m.reasoning = reply->reasoning;
    return m;
}

CachingJudge::CachingJudge(CallSite site, JudgmentCache cache, ConsensusOptions options)
    : site_(std::move(site)), cache_(std::move(cache)), options_(options) {}

AttitudeMap CachingJudge::attitudes(const Transcript& tr, const Turn& turn, const ConversationContext& history) {
    JudgmentCache::AttitudeKey key{tr.run_id, turn.index, turn.speaker};
    if (const AttitudeMap* hit = cache_.find_attitudes(key)) return *hit;
    if (!site_.gateway) throw CacheMiss(JudgmentCache::describe(key));
    ++judge_calls_;
    AttitudeMap m = extract_attitudes(site_, Utterance{turn.speaker, turn.utterance}, tr.scenario, history);
    cache_.put_attitudes(key, m);
    return m;
}

AgreementJudgment CachingJudge::agreement(const Transcript& tr, int turn, const std::string& a, const std::string& b,
                                          const Topic& topic, const std::string& attitude_a,
                                          const std::string& attitude_b, std::optional<double> previous) {
    if (attitude_a.empty() || attitude_b.empty()) return AgreementJudgment{};
    JudgmentCache::AgreementKey key{tr.run_id, turn, a, b, topic.id};
    if (const AgreementJudgment* hit = cache_.find_agreement(key)) return *hit;
    if (!site_.gateway) throw CacheMiss(JudgmentCache::describe(key));
    ++judge_calls_;
    AgreementJudgment j = score_agreement(site_, attitude_a, attitude_b, tr.scenario, topic, options_, previous);
    cache_.put_agreement(key, j);
    return j;
}

MiJudgment CachingJudge::mediator_intelligence(const Transcript& tr, const Turn& turn,
                                               const ConversationContext& prior) {
    JudgmentCache::MiKey key{tr.run_id, turn.index};
    if (const MiJudgment* hit = cache_.find_mi(key)) return *hit;
    if (!site_.gateway) throw CacheMiss(JudgmentCache::describe(key));
    ++judge_calls_;
    MiJudgment m = judge_mediator_intelligence(site_, Utterance{turn.speaker, turn.utterance}, prior);
    cache_.put_mi(key, m);
    return m;
}

// ---------------------------------------------------------------------------
// Tracking

namespace {

void reduce(ConsensusSeries& cs, std::size_t t) {
    const std::size_t M = cs.topics.size();
    const std::size_t P = cs.pair_count();
    double total = 0.0;
    std::size_t total_n = 0;
    for (std::size_t ti = 0; ti < M; ++ti) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t pi = 0; pi < P; ++pi) {
            const AgreementRecord& r = cs.records[t][pi * M + ti];
            if (r.judgment.missing) continue;
            sum += r.judgment.overall;
            ++n;
        }
        cs.g_topic[ti][t] = n ? sum / static_cast<double>(n) : 0.0;
        total += sum;
        total_n += n;
    }
    cs.g[t] = total_n ? total / static_cast<double>(total_n) : 0.0;
}

}  // namespace

ConsensusSeries track_consensus(const Transcript& tr, const Scenario& s, JudgmentSource& judge,
                                AttitudeState* state_out) {
    if (s.parties.size() < 2) throw DomainError("consensus tracking needs at least two parties");
    AttitudeState state = initial_attitude_state(s);
    ConsensusSeries cs;
    cs.parties = state.parties;
    cs.topics = state.topics;
    const std::size_t T = tr.turns.size();
    const std::size_t M = cs.topics.size();
    const auto pairs = party_pairs(cs.parties.size());
    cs.g.assign(T + 1, 0.0);
    cs.g_topic.assign(M, std::vector<double>(T + 1, 0.0));
    cs.mentions.assign(M, std::vector<int>(T + 1, 0));
    cs.records.assign(T + 1, {});

    auto judge_cell = [&](std::size_t t, std::size_t pi, std::size_t ti, const AgreementRecord* prev) {
        const auto [ia, ib] = pairs[pi];
        AgreementRecord rec;
        rec.party_a = cs.parties[ia];
        rec.party_b = cs.parties[ib];
        rec.topic = cs.topics[ti];
        rec.turn = static_cast<int>(t);
        rec.judged_turn = static_cast<int>(t);
        std::optional<double> previous;
        if (prev && !prev->judgment.missing) previous = prev->judgment.overall;
        rec.judgment = judge.agreement(tr, static_cast<int>(t), rec.party_a, rec.party_b, s.topics[ti],
                                       state.at(t, ia, ti), state.at(t, ib, ti), previous);
        if (rec.judgment.missing && prev) {
            AgreementRecord carried = *prev;
            carried.turn = static_cast<int>(t);
            return carried;
        }
        return rec;
    };

    cs.records[0].resize(pairs.size() * M);
    for (std::size_t pi = 0; pi < pairs.size(); ++pi)
        for (std::size_t ti = 0; ti < M; ++ti) cs.records[0][pi * M + ti] = judge_cell(0, pi, ti, nullptr);
    reduce(cs, 0);

    for (std::size_t t = 1; t <= T; ++t) {
        const Turn& turn = tr.turns[t - 1];
        AttitudeMap extracted;
        std::size_t speaker = std::string::npos;
        if (turn.kind == TurnKind::Participant) {
            auto it = std::find(cs.parties.begin(), cs.parties.end(), turn.speaker);
            if (it != cs.parties.end()) {
                speaker = static_cast<std::size_t>(it - cs.parties.begin());
                std::vector<Turn> prior(tr.turns.begin(), tr.turns.begin() + static_cast<std::ptrdiff_t>(t - 1));
                ConversationContext history{&s, &prior, static_cast<int>(t)};
                extracted = judge.attitudes(tr, turn, history);
            }
        }
        state = update_attitude_state(std::move(state), turn, extracted);
        for (std::size_t ti = 0; ti < M; ++ti) {
            auto it = extracted.find(cs.topics[ti]);
            cs.mentions[ti][t] = it != extracted.end() && it->second ? 1 : 0;
        }
        cs.records[t] = cs.records[t - 1];
        for (auto& r : cs.records[t]) r.turn = static_cast<int>(t);
        if (speaker != std::string::npos) {
            for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
                if (pairs[pi].first != speaker && pairs[pi].second != speaker) continue;
                for (std::size_t ti = 0; ti < M; ++ti)
                    cs.records[t][pi * M + ti] = judge_cell(t, pi, ti, &cs.records[t - 1][pi * M + ti]);
            }
        }
        reduce(cs, t);
    }
    if (state_out) *state_out = std::move(state);
    return cs;
}

ConsensusSeries replay_judgments(const Transcript& tr, const JudgmentCache& cache, const ConsensusOptions& options) {
    CachingJudge judge(CallSite{}, cache, options);
    return track_consensus(tr, tr.scenario, judge);
}

}  // namespace negsim
