#include "negsim/call_site.hpp"

namespace negsim {

namespace {

ChatRequest make_request(const CallSite& site, CallTag tag, const std::string& system_prompt) {
    ChatRequest req;
    req.backend_id = site.backend_id;
    req.system_prompt = system_prompt;
    req.temperature = site.temperature;
    req.max_output_tokens = site.max_output_tokens;
    req.tag = tag;
    return req;
}

}  // namespace

std::string call_text(const CallSite& site, CallTag tag, const std::string& system_prompt,
                      const std::string& user_prompt) {
    ChatRequest req = make_request(site, tag, system_prompt);
    req.messages.push_back({ChatRole::User, user_prompt});
    return site.gateway->complete(req).text;
}

template <class T>
std::optional<T> call_structured(const CallSite& site, CallTag tag, Shape shape, const std::string& system_prompt,
                                 const std::string& user_prompt, int retries) {
    ChatRequest req = make_request(site, tag, system_prompt);
    req.messages.push_back({ChatRole::User, user_prompt});
    for (int attempt = 0;; ++attempt) {
        std::string text = site.gateway->complete(req).text;
        try {
            return extract_as<T>(text, shape, site.diagnostics());
        } catch (const ExtractionError& e) {
            if (attempt >= retries) {
                site.warn(std::string(tag_name(tag)) + ": unusable completion after " + std::to_string(attempt + 1) +
                          " attempt(s): " + e.what());
                return std::nullopt;
            }
            req.messages.push_back({ChatRole::Assistant, text});
            req.messages.push_back({ChatRole::User,
                                    std::string("Your previous reply could not be used (") + e.what() +
                                        "). Reply again with only the JSON object in the requested format."});
        }
    }
}

template std::optional<ThoughtsReply> call_structured<ThoughtsReply>(const CallSite&, CallTag, Shape,
                                                                     const std::string&, const std::string&, int);
template std::optional<GenericDecisionReply> call_structured<GenericDecisionReply>(const CallSite&, CallTag, Shape,
                                                                                   const std::string&,
                                                                                   const std::string&, int);
template std::optional<SocialDecisionReply> call_structured<SocialDecisionReply>(const CallSite&, CallTag, Shape,
                                                                                 const std::string&,
                                                                                 const std::string&, int);
template std::optional<AttitudeMapReply> call_structured<AttitudeMapReply>(const CallSite&, CallTag, Shape,
                                                                           const std::string&, const std::string&,
                                                                           int);
template std::optional<AgreementScoresReply> call_structured<AgreementScoresReply>(const CallSite&, CallTag, Shape,
                                                                                   const std::string&,
                                                                                   const std::string&, int);
template std::optional<SingleAgreementReply> call_structured<SingleAgreementReply>(const CallSite&, CallTag, Shape,
                                                                                   const std::string&,
                                                                                   const std::string&, int);
template std::optional<MotivationReply> call_structured<MotivationReply>(const CallSite&, CallTag, Shape,
                                                                         const std::string&, const std::string&, int);
template std::optional<CandidateEvalReply> call_structured<CandidateEvalReply>(const CallSite&, CallTag, Shape,
                                                                               const std::string&, const std::string&,
                                                                               int);
template std::optional<MiScoresReply> call_structured<MiScoresReply>(const CallSite&, CallTag, Shape,
                                                                     const std::string&, const std::string&, int);
template std::optional<ArticulationReply> call_structured<ArticulationReply>(const CallSite&, CallTag, Shape,
                                                                             const std::string&, const std::string&,
                                                                             int);
template std::optional<MessageReply> call_structured<MessageReply>(const CallSite&, CallTag, Shape,
                                                                   const std::string&, const std::string&, int);
template std::optional<TargetTopicReply> call_structured<TargetTopicReply>(const CallSite&, CallTag, Shape,
                                                                           const std::string&, const std::string&,
                                                                           int);

}  // namespace negsim
