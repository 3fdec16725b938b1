// SPDX-License-Identifier: Apache-2.0
#include <cctype>

#include <fmt/format.h>

#include "structex/backend.hpp"
#include "structex/error.hpp"
#include "structex/hashing.hpp"

namespace structex::backend {
namespace {

bool is_slot_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
         c == '-' || c == '_';
}

// Calls visit(literal_text) and visit_slot(name) in body order.
template <typename Literal, typename Slot>
void scan(std::string_view body, Literal&& literal, Slot&& slot) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find('{', pos);
    if (open == std::string_view::npos) break;
    auto close = open + 1;
    while (close < body.size() && is_slot_char(body[close])) ++close;
    if (close < body.size() && body[close] == '}' && close > open + 1 &&
        std::islower(static_cast<unsigned char>(body[open + 1]))) {
      literal(body.substr(pos, open - pos));
      slot(std::string(body.substr(open + 1, close - open - 1)));
      pos = close + 1;
    } else {
      literal(body.substr(pos, open + 1 - pos));
      pos = open + 1;
    }
  }
  literal(body.substr(std::min(pos, body.size())));
}

std::string strip_trailing_newlines(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string body)
    : name_(std::move(name)), body_(std::move(body)) {
  scan(body_, [](std::string_view) {}, [&](std::string slot) { required_.insert(std::move(slot)); });
}

void PromptTemplate::check_slots(const Slots& slots) const {
  for (const auto& slot : required_) {
    if (!slots.contains(slot)) {
      throw Error(ErrorCode::kMissingSlot,
                  fmt::format("template '{}' needs slot {{{}}}", name_, slot));
    }
  }
}

std::string PromptTemplate::render(const Slots& slots) const {
  check_slots(slots);
  std::string out;
  out.reserve(body_.size());
  scan(body_, [&](std::string_view text) { out += text; },
       [&](const std::string& slot) { out += slots.at(slot); });
  return out;
}

TemplateSet load_templates(const std::filesystem::path& dir) {
  auto load = [&](const char* name) {
    return PromptTemplate(name, strip_trailing_newlines(read_text_file(dir / fmt::format("{}.txt", name))));
  };
  return TemplateSet{load("fact_table"), load("decision"), load("reflection")};
}

std::string normalize_line_endings(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

std::string fingerprint(const PromptTemplate& tpl, const Slots& slots) {
  std::string canonical = fmt::format("template:{}\n", tpl.name());
  for (const auto& key : tpl.required_slots()) {
    auto it = slots.find(key);
    const std::string value = it == slots.end() ? std::string{} : normalize_line_endings(it->second);
    canonical += fmt::format("{}:{}:{}\n", key, value.size(), value);
  }
  return sha256_hex(canonical);
}

std::string LlmBackend::complete(const PromptTemplate& tpl, const Slots& slots) {
  tpl.check_slots(slots);
  return do_complete(tpl, slots);
}

}  // namespace structex::backend
