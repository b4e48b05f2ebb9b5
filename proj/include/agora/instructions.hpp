#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "agora/error.hpp"

namespace agora {

inline constexpr std::string_view kLetterAnswerFooter =
    "Make absolutely sure to provide your solution in the end: 'FINAL SOLUTION: <Letter>'.";

struct InstructionTemplate {
  std::string key;
  std::string text;  // includes the letter footer for multiple-choice styles
  bool multiple_choice = false;
};

// Task instructions by dataset key. The wording of the built-ins is authored
// for this project; only the answer footer is the reference format.
class InstructionRegistry {
 public:
  InstructionRegistry() {
    const std::string mcq = "Answer the following multiple-choice question by choosing the correct option.";
    const std::string boolean = "Answer the following yes/no question. Option A means yes and option B means no.";
    for (const char* key : {"multiple_choice", "mmlu", "mmlu_pro", "gpqa", "winogrande"}) add(key, mcq, true);
    for (const char* key : {"boolean_qa", "strategyqa"}) add(key, boolean, true);
    for (const char* key : {"paraphrase", "etpc"})
      add(key, "Paraphrase the provided text. Keep its meaning and change its wording.", false);
    for (const char* key : {"summarization", "xsum"}) add(key, "Summarize the provided text in one sentence.", false);
  }

  void add(std::string key, const std::string& instruction, bool multiple_choice) {
    InstructionTemplate t;
    t.key = key;
    t.multiple_choice = multiple_choice;
    t.text = multiple_choice ? instruction + " " + std::string(kLetterAnswerFooter) : instruction;
    templates_[std::move(key)] = std::move(t);
  }

  const InstructionTemplate& get(std::string_view key) const {
    const auto it = templates_.find(std::string(key));
    if (it == templates_.end()) throw UnknownTemplate("unknown task instruction template '" + std::string(key) + "'");
    return it->second;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : templates_) out.push_back(k);
    return out;
  }

 private:
  std::map<std::string, InstructionTemplate> templates_;
};

inline const InstructionRegistry& default_instructions() {
  static const InstructionRegistry registry;
  return registry;
}

inline const InstructionTemplate& instruction_for(std::string_view key) { return default_instructions().get(key); }

}  // namespace agora
