#pragma once

#include <cstdint>
#include <string>

namespace scra {

// Frozen text-generation model. Shared by the summarizer, the answer engine
// and the QA consistency filter.
class TextCompleter {
public:
    virtual ~TextCompleter() = default;
    virtual std::string id() const = 0;
    virtual std::string complete(const std::string& prompt, int max_tokens, uint64_t seed) = 0;
    virtual int max_concurrency() const { return 1; }
};

} // namespace scra
