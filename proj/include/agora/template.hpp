#pragma once

#include <map>
#include <string>
#include <string_view>

#include "agora/error.hpp"

namespace agora {

using SlotMap = std::map<std::string, std::string, std::less<>>;

class TemplateError : public Error {
 public:
  using Error::Error;
};

// Minimal mustache subset used by the prompt catalog:
//   {{name}}              slot, must be present in the slot map
//   {{#name}}...{{/name}}  rendered iff the slot is present and non-empty
//   {{^name}}...{{/name}}  rendered iff the slot is absent or empty
// No escaping; prompts are plain text.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string_view text) : text_(text) {}

  std::string render(const SlotMap& slots) const {
    std::string out;
    render_range(text_, slots, out);
    return out;
  }

 private:
  static std::size_t find_close(std::string_view text, std::size_t from, std::string_view name) {
    // Sections of the same name may nest; track depth.
    const std::string open_pos = "{{#" + std::string(name) + "}}";
    const std::string open_neg = "{{^" + std::string(name) + "}}";
    const std::string close = "{{/" + std::string(name) + "}}";
    int depth = 1;
    std::size_t pos = from;
    while (true) {
      const auto next_close = text.find(close, pos);
      if (next_close == std::string_view::npos) throw TemplateError("unclosed section: " + std::string(name));
      auto next_open = std::min(text.find(open_pos, pos), text.find(open_neg, pos));
      if (next_open < next_close) {
        ++depth;
        pos = next_open + open_pos.size();
        continue;
      }
      if (--depth == 0) return next_close;
      pos = next_close + close.size();
    }
  }

  static void render_range(std::string_view text, const SlotMap& slots, std::string& out) {
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto open = text.find("{{", pos);
      if (open == std::string_view::npos) {
        out.append(text.substr(pos));
        return;
      }
      out.append(text.substr(pos, open - pos));
      const auto end = text.find("}}", open);
      if (end == std::string_view::npos) throw TemplateError("unterminated tag");
      const auto tag = text.substr(open + 2, end - open - 2);
      if (tag.empty()) throw TemplateError("empty tag");
      const char sigil = tag.front();
      if (sigil == '#' || sigil == '^') {
        const auto name = tag.substr(1);
        const auto body_begin = end + 2;
        const auto close = find_close(text, body_begin, name);
        const auto it = slots.find(name);
        const bool truthy = it != slots.end() && !it->second.empty();
        if (truthy == (sigil == '#')) render_range(text.substr(body_begin, close - body_begin), slots, out);
        pos = close + name.size() + 5;  // "{{/" + name + "}}"
      } else if (sigil == '/') {
        throw TemplateError("stray close tag: " + std::string(tag));
      } else {
        const auto it = slots.find(tag);
        if (it == slots.end()) throw TemplateError("missing slot: " + std::string(tag));
        out.append(it->second);
        pos = end + 2;
      }
    }
  }

  std::string_view text_;
};

}  // namespace agora
