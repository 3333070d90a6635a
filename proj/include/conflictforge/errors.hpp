#pragma once

#include <stdexcept>
#include <string>

namespace conflictforge {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define CONFLICTFORGE_ERROR(Name)                                       \
    struct Name : Error {                                               \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

CONFLICTFORGE_ERROR(UnknownRelation);
CONFLICTFORGE_ERROR(ExhaustedPool);
CONFLICTFORGE_ERROR(NoMentionFound);
CONFLICTFORGE_ERROR(GenerationParseError);
CONFLICTFORGE_ERROR(TransportError);
CONFLICTFORGE_ERROR(RateLimited);
CONFLICTFORGE_ERROR(AuthMissing);
CONFLICTFORGE_ERROR(EmptyResponse);
CONFLICTFORGE_ERROR(UnscriptedPrompt);
CONFLICTFORGE_ERROR(JudgeUnavailable);
CONFLICTFORGE_ERROR(MalformedJudgeOutput);
CONFLICTFORGE_ERROR(InsufficientVerdicts);
CONFLICTFORGE_ERROR(MissingVariant);
CONFLICTFORGE_ERROR(ZeroLength);
CONFLICTFORGE_ERROR(PoolUnderflow);
CONFLICTFORGE_ERROR(CorpusTooSmall);
CONFLICTFORGE_ERROR(NotFragmentable);
CONFLICTFORGE_ERROR(MissingPopularity);
CONFLICTFORGE_ERROR(IncompleteRun);
CONFLICTFORGE_ERROR(ConfigError);

#undef CONFLICTFORGE_ERROR

}  // namespace conflictforge
