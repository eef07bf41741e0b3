#pragma once

#include <optional>
#include <string>

#include "negsim/gateway.hpp"
#include "negsim/prompts.hpp"
#include "negsim/structured.hpp"

namespace negsim {

/// Everything a module needs to issue model calls for one role.
struct CallSite {
    Gateway* gateway = nullptr;
    const PromptLibrary* prompts = nullptr;
    std::string backend_id;
    double temperature = 0.7;
    int max_output_tokens = 1024;

    Diagnostics* diagnostics() const { return gateway ? &gateway->diagnostics() : nullptr; }
    void warn(std::string message) const {
        if (gateway) gateway->diagnostics().warn(std::move(message));
    }
};

/// Sends one request and returns the raw completion text.
std::string call_text(const CallSite& site, CallTag tag, const std::string& system_prompt,
                      const std::string& user_prompt);

/// Sends a request and extracts `shape`. On ExtractionError the model is
/// re-prompted up to `retries` more times; returns nullopt (with a warning)
/// once those are used up. GatewayError propagates.
template <class T>
std::optional<T> call_structured(const CallSite& site, CallTag tag, Shape shape, const std::string& system_prompt,
                                 const std::string& user_prompt, int retries = 1);

}  // namespace negsim
