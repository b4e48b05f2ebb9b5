#pragma once

#include <stdexcept>
#include <string>

namespace agora {

// Base for every error raised by the engine. Callers that only need to know
// "the debate failed" catch this; tests match the concrete subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AGORA_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

// domain-core
AGORA_DEFINE_ERROR(SequenceViolation);
AGORA_DEFINE_ERROR(DebateEnded);
AGORA_DEFINE_ERROR(PreconditionViolation);

// model-gateway
AGORA_DEFINE_ERROR(EndpointUnreachable);
AGORA_DEFINE_ERROR(MalformedResponse);
AGORA_DEFINE_ERROR(AuthRejected);
AGORA_DEFINE_ERROR(NoRuleMatched);

// agents
AGORA_DEFINE_ERROR(PersonaParseFailure);
AGORA_DEFINE_ERROR(PersonaUniquenessFailure);
AGORA_DEFINE_ERROR(TraitOutOfRange);

// paradigms
AGORA_DEFINE_ERROR(PanelTooSmall);

// decisions
AGORA_DEFINE_ERROR(VoteParseFailure);
AGORA_DEFINE_ERROR(BudgetExceeded);
AGORA_DEFINE_ERROR(DuplicateRank);
AGORA_DEFINE_ERROR(AllBallotsInvalid);

// datasets
AGORA_DEFINE_ERROR(FormatError);
AGORA_DEFINE_ERROR(MappingError);
AGORA_DEFINE_ERROR(EmptyDataset);
AGORA_DEFINE_ERROR(UnknownTemplate);

// orchestrator
AGORA_DEFINE_ERROR(ConfigKeyUnknown);
AGORA_DEFINE_ERROR(ConfigMissingRequired);
AGORA_DEFINE_ERROR(ConfigInvalid);

// evaluation
AGORA_DEFINE_ERROR(MissingReference);
AGORA_DEFINE_ERROR(EmptyResults);

#undef AGORA_DEFINE_ERROR

// A transient transport failure the gateway may retry (timeouts, 5xx, 429).
class TransientFailure : public Error {
 public:
  TransientFailure(const std::string& what, int status) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

}  // namespace agora
