// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace cfgctrl {

/// Maps JSON pointers ("/controller/type") to the 1-based source line where
/// the member or element starts. Tolerates malformed input; positions after
/// the first syntax error are simply missing.
class JsonLineIndex {
 public:
  explicit JsonLineIndex(std::string_view text);

  /// Line of `pointer`, or of its nearest indexed ancestor.
  std::optional<int> line_of(std::string_view pointer) const;

 private:
  std::map<std::string, int, std::less<>> lines_;
};

/// Escapes a single reference token per RFC 6901.
std::string escape_pointer_token(std::string_view token);

}  // namespace cfgctrl
