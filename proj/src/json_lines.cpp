// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/json_lines.hpp"

#include <cctype>
#include <vector>

namespace cfgctrl {

std::string escape_pointer_token(std::string_view token) {
  std::string out;
  for (const char c : token) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

namespace {

struct Frame {
  bool is_object = false;
  std::string pointer;
  std::string pending_key;
  bool expecting_key = true;
  int index = 0;
  int pending_line = 0;
};

}  // namespace

JsonLineIndex::JsonLineIndex(std::string_view text) {
  std::vector<Frame> stack;
  int line = 1;
  std::size_t i = 0;

  const auto read_string = [&]() -> std::string {
    std::string out;
    ++i;  // opening quote
    while (i < text.size() && text[i] != '"') {
      if (text[i] == '\\' && i + 1 < text.size()) {
        out += text[i + 1];
        i += 2;
        continue;
      }
      if (text[i] == '\n') ++line;
      out += text[i++];
    }
    ++i;  // closing quote
    return out;
  };

  // Records the pointer of a value starting at the current position and
  // returns it.
  const auto begin_value = [&]() -> std::string {
    if (stack.empty()) {
      lines_.emplace("", line);
      return "";
    }
    Frame& top = stack.back();
    std::string pointer;
    int at = line;
    if (top.is_object) {
      pointer = top.pointer + "/" + escape_pointer_token(top.pending_key);
      at = top.pending_line;
    } else {
      pointer = top.pointer + "/" + std::to_string(top.index);
    }
    lines_.emplace(pointer, at);
    return pointer;
  };

  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    switch (c) {
      case '{':
      case '[': {
        std::string pointer = begin_value();
        Frame f;
        f.is_object = c == '{';
        f.pointer = std::move(pointer);
        stack.push_back(std::move(f));
        ++i;
        break;
      }
      case '}':
      case ']':
        if (stack.empty()) return;
        stack.pop_back();
        ++i;
        break;
      case ':':
        if (!stack.empty()) stack.back().expecting_key = false;
        ++i;
        break;
      case ',':
        if (!stack.empty()) {
          if (stack.back().is_object) {
            stack.back().expecting_key = true;
          } else {
            ++stack.back().index;
          }
        }
        ++i;
        break;
      case '"': {
        if (!stack.empty() && stack.back().is_object && stack.back().expecting_key) {
          const int key_line = line;
          stack.back().pending_key = read_string();
          stack.back().pending_line = key_line;
        } else {
          begin_value();
          read_string();
        }
        break;
      }
      default: {
        begin_value();
        while (i < text.size() && text[i] != ',' && text[i] != '}' && text[i] != ']' &&
               !std::isspace(static_cast<unsigned char>(text[i]))) {
          ++i;
        }
        break;
      }
    }
  }
}

std::optional<int> JsonLineIndex::line_of(std::string_view pointer) const {
  std::string p(pointer);
  while (true) {
    if (const auto it = lines_.find(p); it != lines_.end()) return it->second;
    if (p.empty()) return std::nullopt;
    const auto slash = p.rfind('/');
    if (slash == std::string::npos) return std::nullopt;
    p.resize(slash);
  }
}

}  // namespace cfgctrl
