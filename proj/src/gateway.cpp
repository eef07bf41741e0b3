#include "negsim/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "json_util.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace negsim {

using detail::json;

namespace {

struct TagName {
    CallTag tag;
    std::string_view name;
};

constexpr TagName kTagNames[] = {
    {CallTag::ThoughtGen, "thought_gen"},
    {CallTag::MotivationRate, "motivation_rate"},
    {CallTag::ParticipantArticulate, "articulate"},
    {CallTag::GenericWhen, "generic_when"},
    {CallTag::GenericHow, "generic_how"},
    {CallTag::SocialWhen, "social_when"},
    {CallTag::SocialThoughts, "social_thoughts"},
    {CallTag::SocialEval, "social_eval"},
    {CallTag::MediatorArticulate, "mediator_articulate"},
    {CallTag::TargetTopic, "target_topic"},
    {CallTag::AttitudeExtract, "attitude_extract"},
    {CallTag::AgreementJudge, "agreement_judge"},
    {CallTag::MiJudge, "mi_judge"},
};

}  // namespace

std::string_view tag_name(CallTag tag) {
    for (const auto& t : kTagNames)
        if (t.tag == tag) return t.name;
    return "unknown";
}

std::optional<CallTag> tag_from_name(std::string_view name) {
    for (const auto& t : kTagNames)
        if (t.name == name) return t.tag;
    return std::nullopt;
}

const std::vector<CallTag>& all_call_tags() {
    static const std::vector<CallTag> tags = [] {
        std::vector<CallTag> v;
        for (const auto& t : kTagNames) v.push_back(t.tag);
        return v;
    }();
    return tags;
}

ScriptExhausted::ScriptExhausted(std::string tag, std::size_t seq)
    : GatewayError(ErrorKind::ScriptExhausted,
                   "script exhausted for tag '" + tag + "' at sequence index " + std::to_string(seq)),
      tag_(std::move(tag)),
      seq_(seq) {}

// ---------------------------------------------------------------------------
// Clocks

double SteadyClock::now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
}

void SteadyClock::sleep(double seconds) {
    if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

double VirtualClock::now() const {
    std::lock_guard lock(mu_);
    return now_;
}

void VirtualClock::advance(double seconds) {
    std::lock_guard lock(mu_);
    if (seconds > 0) now_ += seconds;
}

// ---------------------------------------------------------------------------
// Scripted backend

ScriptedBackend::ScriptedBackend(BackendSpec spec) : Backend(std::move(spec)) {
    parse(detail::read_file(this->spec().script_path));
}

ScriptedBackend::ScriptedBackend(BackendSpec spec, std::string_view script_text) : Backend(std::move(spec)) {
    parse(script_text);
}

void ScriptedBackend::parse(std::string_view script_text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= script_text.size()) {
        std::size_t end = script_text.find('\n', pos);
        if (end == std::string_view::npos) end = script_text.size();
        std::string_view line = script_text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') {
            if (end == script_text.size()) break;
            continue;
        }
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no), std::string("bad script record: ") + e.what());
        }
        std::string where = "line " + std::to_string(line_no);
        std::string name = detail::require_string(rec, "tag", where);
        auto tag = tag_from_name(name);
        if (!tag) throw ParseError(where, "unknown tag '" + name + "'");
        ScriptEntry entry;
        entry.text = detail::optional_string(rec, "text", where);
        entry.error = detail::optional_string(rec, "error", where);
        if (auto it = rec.find("latency_s"); it != rec.end()) {
            if (!it->is_number()) throw ParseError(where + ".latency_s", "expected a number");
            entry.latency_s = it->get<double>();
        }
        if (rec.value("fallback", false)) {
            fallback_[*tag] = std::move(entry);
        } else {
            auto& seq = entries_[*tag];
            std::size_t index = seq.size();
            if (auto it = rec.find("seq"); it != rec.end()) {
                if (!it->is_number_unsigned()) throw ParseError(where + ".seq", "expected a non-negative integer");
                index = it->get<std::size_t>();
            }
            if (index >= seq.size()) seq.resize(index + 1);
            if (seq[index]) throw ParseError(where, "duplicate entry for " + name + "#" + std::to_string(index));
            seq[index] = std::move(entry);
        }
        if (end == script_text.size()) break;
    }
}

BackendReply ScriptedBackend::send(const ChatRequest& req) {
    ScriptEntry entry;
    {
        std::lock_guard lock(mu_);
        std::size_t index = cursor_[req.tag]++;
        auto it = entries_.find(req.tag);
        if (it != entries_.end() && index < it->second.size() && it->second[index]) {
            entry = *it->second[index];
        } else if (auto fb = fallback_.find(req.tag); fb != fallback_.end()) {
            entry = fb->second;
        } else {
            throw ScriptExhausted(std::string(tag_name(req.tag)), index);
        }
    }
    if (entry.error == "unavailable")
        throw TransientBackendError("scripted transient failure for tag '" + std::string(tag_name(req.tag)) + "'");
    if (entry.error == "fatal")
        throw BackendUnavailable("scripted backend failure for tag '" + std::string(tag_name(req.tag)) + "'");
    if (entry.error == "auth") throw AuthError("scripted authentication failure");
    return {entry.text, entry.latency_s, std::nullopt};
}

std::size_t ScriptedBackend::consumed(CallTag tag) const {
    std::lock_guard lock(mu_);
    auto it = cursor_.find(tag);
    return it == cursor_.end() ? 0 : it->second;
}

void ScriptedBackend::reset() {
    std::lock_guard lock(mu_);
    cursor_.clear();
}

// ---------------------------------------------------------------------------
// HTTP backend

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an absolute URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string_view role_name(ChatRole r) {
    switch (r) {
        case ChatRole::System: return "system";
        case ChatRole::Assistant: return "assistant";
        case ChatRole::User: break;
    }
    return "user";
}

}  // namespace

HttpChatBackend::HttpChatBackend(BackendSpec spec) : Backend(std::move(spec)) {
    if (this->spec().endpoint.empty()) throw ConfigError("http_chat backend '" + this->spec().id + "' has no endpoint");
    split_url(this->spec().endpoint);
}

BackendReply HttpChatBackend::send(const ChatRequest& req) {
    const BackendSpec& s = spec();
    SplitUrl url = split_url(s.endpoint);

    httplib::Headers headers;
    if (!s.api_key_env.empty()) {
        const char* key = std::getenv(s.api_key_env.c_str());
        if (!key || !*key) throw AuthError("environment variable " + s.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body;
    body["model"] = s.model_name;
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_output_tokens;
    body["messages"] = json::array();
    if (!req.system_prompt.empty()) body["messages"].push_back({{"role", "system"}, {"content", req.system_prompt}});
    for (const auto& m : req.messages) body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});

    httplib::Client client(url.origin);
    auto secs = static_cast<time_t>(s.timeout_s);
    client.set_connection_timeout(std::min<time_t>(secs, 30), 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);

    auto res = client.Post(url.path, headers, body.dump(-1, ' ', false, json::error_handler_t::replace),
                           "application/json");
    if (!res) throw TransientBackendError("request to " + s.endpoint + " failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
        throw AuthError("backend '" + s.id + "' rejected credentials (HTTP " + std::to_string(res->status) + ")");
    if (res->status == 408 || res->status == 429 || res->status >= 500)
        throw TransientBackendError("backend '" + s.id + "' returned HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw BackendUnavailable("backend '" + s.id + "' returned HTTP " + std::to_string(res->status));

    json doc;
    try {
        doc = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw BackendUnavailable("backend '" + s.id + "' returned a non-JSON body");
    }
    BackendReply reply;
    try {
        reply.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw BackendUnavailable("backend '" + s.id + "' returned an unexpected response shape");
    }
    if (auto u = doc.find("usage"); u != doc.end() && u->is_object()) {
        TokenUsage usage;
        usage.prompt_tokens = u->value("prompt_tokens", 0);
        usage.completion_tokens = u->value("completion_tokens", 0);
        reply.usage = usage;
    }
    return reply;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
    if (spec.kind == BackendKind::Scripted) return std::make_unique<ScriptedBackend>(spec);
    return std::make_unique<HttpChatBackend>(spec);
}

BackendSpec parse_backend_shorthand(std::string_view text, std::string id) {
    BackendSpec spec;
    spec.id = std::move(id);
    auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ConfigError("backend must look like scripted:PATH or http:URL");
    std::string_view kind = text.substr(0, colon);
    std::string_view rest = text.substr(colon + 1);
    if (kind == "scripted") {
        spec.kind = BackendKind::Scripted;
        spec.script_path = std::string(rest);
        spec.model_name = "scripted";
    } else if (kind == "http") {
        spec.kind = BackendKind::HttpChat;
        auto hash = rest.find('#');
        spec.endpoint = std::string(rest.substr(0, hash));
        spec.model_name = hash == std::string_view::npos ? "" : std::string(rest.substr(hash + 1));
        spec.api_key_env = "NEGSIM_API_KEY";
    } else {
        throw ConfigError("unknown backend kind '" + std::string(kind) + "'");
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Diagnostics

void Diagnostics::warn(std::string message) {
    std::lock_guard lock(mu_);
    warnings_.push_back(std::move(message));
}

std::vector<std::string> Diagnostics::warnings() const {
    std::lock_guard lock(mu_);
    return warnings_;
}

std::size_t Diagnostics::count() const {
    std::lock_guard lock(mu_);
    return warnings_.size();
}

void Diagnostics::clear() {
    std::lock_guard lock(mu_);
    warnings_.clear();
}

std::string call_record_jsonl(const CallRecord& rec) {
    json j;
    j["tag"] = rec.tag;
    j["hash"] = rec.request_hash;
    j["backend"] = rec.backend_id;
    j["latency_s"] = rec.latency_s;
    j["attempts"] = rec.attempts;
    j["ok"] = rec.ok;
    if (!rec.error.empty()) j["error"] = rec.error;
    if (rec.usage) j["usage"] = {{"prompt_tokens", rec.usage->prompt_tokens}, {"completion_tokens", rec.usage->completion_tokens}};
    return detail::jsonl_line(j);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::unique_ptr<Clock> clock) : clock_(std::move(clock)) {
    if (!clock_) clock_ = std::make_unique<VirtualClock>();
}

void Gateway::register_backend(std::unique_ptr<Backend> backend) {
    std::string id = backend->spec().id;
    if (id.empty()) throw ConfigError("backend id must not be empty");
    backends_[id] = std::move(backend);
}

bool Gateway::has_backend(std::string_view id) const { return backends_.find(id) != backends_.end(); }

Backend& Gateway::backend(std::string_view id) {
    auto it = backends_.find(id);
    if (it == backends_.end()) throw ConfigError("no backend registered under id '" + std::string(id) + "'");
    return *it->second;
}

int Gateway::max_parallelism(std::string_view id) const {
    auto it = backends_.find(id);
    if (it == backends_.end()) return 1;
    const BackendSpec& s = it->second->spec();
    // Scripted sequences are order-sensitive.
    if (s.kind == BackendKind::Scripted) return 1;
    return std::max(1, s.max_parallelism);
}

std::string Gateway::request_hash(const ChatRequest& req) {
    std::uint64_t h = detail::fnv1a64(tag_name(req.tag));
    h = detail::fnv1a64(req.system_prompt, h);
    for (const auto& m : req.messages) {
        h = detail::fnv1a64(role_name(m.role), h);
        h = detail::fnv1a64(m.content, h);
    }
    return detail::hex64(h);
}

ChatResponse Gateway::complete(const ChatRequest& req) {
    if (req.messages.empty()) throw ConfigError("chat request '" + std::string(tag_name(req.tag)) + "' has no messages");
    Backend& be = backend(req.backend_id);
    const RetryPolicy& policy = be.spec().retry;
    const int max_attempts = std::max(1, policy.max_attempts);

    CallRecord rec;
    rec.tag = std::string(tag_name(req.tag));
    rec.request_hash = request_hash(req);
    rec.backend_id = req.backend_id;
    ++calls_;

    auto append = [this](CallRecord r) {
        std::lock_guard lock(log_mu_);
        log_.push_back(std::move(r));
    };

    const double start = clock_->now();
    double backoff = policy.initial_backoff_s;
    for (int attempt = 1;; ++attempt) {
        rec.attempts = attempt;
        try {
            BackendReply reply = be.send(req);
            if (reply.latency_s && clock_->is_virtual()) clock_->advance(*reply.latency_s);
            ChatResponse resp;
            resp.text = std::move(reply.text);
            resp.latency_s = clock_->now() - start;
            resp.backend_id = req.backend_id;
            resp.usage = reply.usage;
            resp.attempts = attempt;
            rec.latency_s = resp.latency_s;
            rec.usage = reply.usage;
            append(rec);
            return resp;
        } catch (const TransientBackendError& e) {
            if (attempt >= max_attempts) {
                rec.ok = false;
                rec.error = e.what();
                rec.latency_s = clock_->now() - start;
                append(rec);
                throw BackendUnavailable(std::string(e.what()) + " (after " + std::to_string(attempt) + " attempts)");
            }
            clock_->sleep(backoff);
            backoff *= policy.backoff_multiplier;
        } catch (const GatewayError& e) {
            rec.ok = false;
            rec.error = e.what();
            rec.latency_s = clock_->now() - start;
            append(rec);
            throw;
        }
    }
}

std::vector<CallRecord> Gateway::drain_call_log() {
    std::lock_guard lock(log_mu_);
    std::vector<CallRecord> out;
    out.swap(log_);
    return out;
}

}  // namespace negsim
