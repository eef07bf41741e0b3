#pragma once

// Tolerant extraction of the machine-readable objects that every prompt asks
// the model to return.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "negsim/error.hpp"

namespace negsim {

class Diagnostics;

class ExtractionError : public Error {
public:
    explicit ExtractionError(const std::string& what) : Error(ErrorKind::Extraction, what) {}

protected:
    ExtractionError(ErrorKind kind, const std::string& what) : Error(kind, what) {}
};

/// A required field is missing or has the wrong type.
class SchemaError : public ExtractionError {
public:
    explicit SchemaError(std::string field)
        : ExtractionError(ErrorKind::Schema, "missing or mistyped field '" + field + "'"), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class Shape {
    Thoughts,
    GenericDecision,
    SocialDecision,
    AttitudeMap,
    AgreementScores,
    SingleAgreement,
    MotivationRating,
    CandidateEval,
    MiScores,
    Articulation,
    Message,
    TargetTopic,
};

inline constexpr std::string_view kNoMention = "No Mention";

struct ThoughtItem {
    std::string content;
    int persona_level = 3;
    std::vector<std::string> stimuli;
    std::string strategy;  // optional free label, e.g. "facilitative"
    std::optional<std::string> persona_adjustment;
    bool operator==(const ThoughtItem&) const = default;
};

struct ThoughtsReply {
    std::vector<ThoughtItem> thoughts;
    bool operator==(const ThoughtsReply&) const = default;
};

struct GenericDecisionReply {
    bool should_engage = false;
    std::string reason;
    bool operator==(const GenericDecisionReply&) const = default;
};

/// Socio-cognitive dimensions, in this fixed order everywhere.
enum class SocioDim { Perception = 0, Emotional = 1, Cognitive = 2, Communication = 3 };
inline constexpr std::array<std::string_view, 4> kSocioDimNames = {
    "perception alignment", "emotional dynamics", "cognitive challenges", "communication breakdowns"};

struct SocialDecisionReply {
    bool should_engage = false;
    double rating = 1.0;
    std::string reasoning;
    std::vector<std::string> stimuli;
    std::array<std::optional<std::string>, 4> issues;  // per SocioDim
    bool operator==(const SocialDecisionReply&) const = default;
};

struct AttitudeMapReply {
    // Raw key as returned (topic id or title) -> stance, nullopt = "No Mention".
    std::map<std::string, std::optional<std::string>> attitudes;
    bool operator==(const AttitudeMapReply&) const = default;
};

/// Agreement dimensions, in this fixed order everywhere.
inline constexpr std::array<std::string_view, 5> kAgreementDimNames = {
    "shared goals", "common understanding", "agreement on terms", "tone and willingness",
    "shared decision making"};

struct AgreementScoresReply {
    std::array<double, 5> dims{};
    std::optional<double> judge_overall;
    std::string reasoning;
    bool operator==(const AgreementScoresReply&) const = default;
};

struct SingleAgreementReply {
    double score = 0.0;
    std::string reasoning;
    bool operator==(const SingleAgreementReply&) const = default;
};

struct MotivationReply {
    double rating = 1.0;
    std::string reasoning;
    bool operator==(const MotivationReply&) const = default;
};

struct CandidateEvalReply {
    std::array<double, 4> dims{};  // per SocioDim, 1..5
    double rating = 1.0;
    std::string reasoning;
    bool operator==(const CandidateEvalReply&) const = default;
};

inline constexpr int kNotApplicable = -1;

struct MiScoresReply {
    std::array<int, 4> scores{};  // per SocioDim: 1..5 or kNotApplicable
    std::array<std::string, 4> reasoning;
    bool operator==(const MiScoresReply&) const = default;
};

struct ArticulationReply {
    std::string text;
    bool operator==(const ArticulationReply&) const = default;
};

struct MessageReply {
    std::string text;
    bool operator==(const MessageReply&) const = default;
};

struct TargetTopicReply {
    std::string topic;
    bool operator==(const TargetTopicReply&) const = default;
};

using StructuredValue =
    std::variant<ThoughtsReply, GenericDecisionReply, SocialDecisionReply, AttitudeMapReply, AgreementScoresReply,
                 SingleAgreementReply, MotivationReply, CandidateEvalReply, MiScoresReply, ArticulationReply,
                 MessageReply, TargetTopicReply>;

/// Strips fences and prose, locates the outermost object literal (accepting
/// Python-style True/False/None, single quotes and trailing commas),
/// validates required fields and coerces numerics. Out-of-range ratings are
/// clamped with a warning sent to `diag` when provided.
StructuredValue extract_structured(std::string_view text, Shape shape, Diagnostics* diag = nullptr);

template <class T>
T extract_as(std::string_view text, Shape shape, Diagnostics* diag = nullptr) {
    return std::get<T>(extract_structured(text, shape, diag));
}

/// Canonical JSON rendering of a value; the inverse of extract_structured.
std::string render_structured(const StructuredValue& value);

Shape shape_of(const StructuredValue& value);

}  // namespace negsim
