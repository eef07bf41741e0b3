#pragma once

// Provider-agnostic boundary for every generative and judging call. Nothing
// outside this module touches the network.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "negsim/error.hpp"

namespace negsim {

/// Purpose label of a call. Drives logging and scripted-backend matching.
enum class CallTag {
    ThoughtGen,
    MotivationRate,
    ParticipantArticulate,
    GenericWhen,
    GenericHow,
    SocialWhen,
    SocialThoughts,
    SocialEval,
    MediatorArticulate,
    TargetTopic,
    AttitudeExtract,
    AgreementJudge,
    MiJudge,
};

std::string_view tag_name(CallTag tag);
std::optional<CallTag> tag_from_name(std::string_view name);
const std::vector<CallTag>& all_call_tags();

enum class ChatRole { System, User, Assistant };

struct ChatMessage {
    ChatRole role = ChatRole::User;
    std::string content;
};

struct ChatRequest {
    std::string backend_id;
    std::string system_prompt;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_output_tokens = 1024;
    CallTag tag = CallTag::ThoughtGen;
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    double latency_s = 0.0;  // whole call, retries and backoff included
    std::string backend_id;
    std::optional<TokenUsage> usage;
    int attempts = 1;
};

struct RetryPolicy {
    int max_attempts = 3;
    double initial_backoff_s = 1.0;
    double backoff_multiplier = 2.0;
};

enum class BackendKind { HttpChat, Scripted };

struct BackendSpec {
    std::string id;
    BackendKind kind = BackendKind::Scripted;
    // http_chat
    std::string endpoint;     // full URL of the chat-completions route
    std::string api_key_env;  // environment variable holding the bearer token; empty = no auth
    double timeout_s = 120.0;
    // scripted
    std::filesystem::path script_path;
    std::string model_name;
    RetryPolicy retry;
    int max_parallelism = 1;
};

// Gateway failures ---------------------------------------------------------

class GatewayError : public Error {
public:
    using Error::Error;
};

class BackendUnavailable : public GatewayError {
public:
    explicit BackendUnavailable(const std::string& what) : GatewayError(ErrorKind::BackendUnavailable, what) {}
};

/// Thrown by backends for failures worth retrying (timeouts, 5xx, 429).
class TransientBackendError : public BackendUnavailable {
public:
    using BackendUnavailable::BackendUnavailable;
};

class AuthError : public GatewayError {
public:
    explicit AuthError(const std::string& what) : GatewayError(ErrorKind::Auth, what) {}
};

class ScriptExhausted : public GatewayError {
public:
    ScriptExhausted(std::string tag, std::size_t seq);
    const std::string& tag() const noexcept { return tag_; }
    std::size_t sequence_index() const noexcept { return seq_; }

private:
    std::string tag_;
    std::size_t seq_;
};

// Time ---------------------------------------------------------------------

class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() const = 0;      // seconds
    virtual void sleep(double seconds) = 0;
    virtual void advance(double seconds) = 0;  // no-op for real clocks
    virtual bool is_virtual() const = 0;
};

class SteadyClock final : public Clock {
public:
    double now() const override;
    void sleep(double seconds) override;
    void advance(double) override {}
    bool is_virtual() const override { return false; }

private:
    std::chrono::steady_clock::time_point origin_ = std::chrono::steady_clock::now();
};

/// Deterministic clock used with scripted backends: time moves only by the
/// latencies the script declares and by retry backoff.
class VirtualClock final : public Clock {
public:
    double now() const override;
    void sleep(double seconds) override { advance(seconds); }
    void advance(double seconds) override;
    bool is_virtual() const override { return true; }

private:
    mutable std::mutex mu_;
    double now_ = 0.0;
};

// Backends -----------------------------------------------------------------

struct BackendReply {
    std::string text;
    std::optional<double> latency_s;  // declared latency (scripted only)
    std::optional<TokenUsage> usage;
};

class Backend {
public:
    explicit Backend(BackendSpec spec) : spec_(std::move(spec)) {}
    virtual ~Backend() = default;
    const BackendSpec& spec() const noexcept { return spec_; }
    virtual BackendReply send(const ChatRequest& req) = 0;

private:
    BackendSpec spec_;
};

struct ScriptEntry {
    std::string text;
    double latency_s = 0.0;
    std::string error;  // "", "unavailable" (transient), "fatal", "auth"
};

/// Replays canned completions keyed by (tag, per-tag sequence index). A
/// fallback entry for a tag, when present, answers once the sequence is used
/// up; without one the call fails with ScriptExhausted.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(BackendSpec spec);  // loads spec.script_path
    ScriptedBackend(BackendSpec spec, std::string_view script_text);

    BackendReply send(const ChatRequest& req) override;

    std::size_t consumed(CallTag tag) const;
    void reset();

private:
    void parse(std::string_view script_text);

    mutable std::mutex mu_;
    std::map<CallTag, std::vector<std::optional<ScriptEntry>>> entries_;
    std::map<CallTag, ScriptEntry> fallback_;
    std::map<CallTag, std::size_t> cursor_;
};

/// OpenAI-style chat-completions client over cpp-httplib.
class HttpChatBackend final : public Backend {
public:
    explicit HttpChatBackend(BackendSpec spec);
    BackendReply send(const ChatRequest& req) override;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

/// Parses "scripted:PATH" or "http:URL[#model]" shorthand used on the command line.
BackendSpec parse_backend_shorthand(std::string_view text, std::string id);

// Diagnostics --------------------------------------------------------------

/// Thread-safe sink for non-fatal warnings (clamped ratings, parse fallbacks...).
class Diagnostics {
public:
    void warn(std::string message);
    std::vector<std::string> warnings() const;
    std::size_t count() const;
    void clear();

private:
    mutable std::mutex mu_;
    std::vector<std::string> warnings_;
};

struct CallRecord {
    std::string tag;
    std::string request_hash;
    std::string backend_id;
    double latency_s = 0.0;
    int attempts = 1;
    bool ok = true;
    std::string error;
    std::optional<TokenUsage> usage;
};

std::string call_record_jsonl(const CallRecord& rec);

// Gateway ------------------------------------------------------------------

class Gateway {
public:
    explicit Gateway(std::unique_ptr<Clock> clock = std::make_unique<VirtualClock>());

    void register_backend(std::unique_ptr<Backend> backend);
    bool has_backend(std::string_view id) const;
    Backend& backend(std::string_view id);
    int max_parallelism(std::string_view id) const;

    /// Sends the request, retrying transient failures per the backend's
    /// RetryPolicy, and appends one CallRecord to the call log.
    ChatResponse complete(const ChatRequest& req);

    Clock& clock() noexcept { return *clock_; }
    Diagnostics& diagnostics() noexcept { return diagnostics_; }

    std::vector<CallRecord> drain_call_log();
    std::uint64_t call_count() const noexcept { return calls_.load(); }

    static std::string request_hash(const ChatRequest& req);

private:
    std::unique_ptr<Clock> clock_;
    std::map<std::string, std::unique_ptr<Backend>, std::less<>> backends_;
    Diagnostics diagnostics_;
    mutable std::mutex log_mu_;
    std::vector<CallRecord> log_;
    std::atomic<std::uint64_t> calls_{0};
};

}  // namespace negsim
