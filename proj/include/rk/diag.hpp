#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "rk/ast.hpp"

namespace rk {

// A checker/parser diagnostic. `rule` names the judgment or rule that failed
// (e.g. "k-reccons", "conv", "syntax") when one applies.
struct Diag : std::runtime_error {
  Span span;
  std::string rule;

  Diag(Span sp, std::string rule_name, const std::string& message)
      : std::runtime_error(message), span(sp), rule(std::move(rule_name)) {}
};

// A bug in the checker itself (stuck well-typed term, exhausted fuel, ...).
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Maps byte offsets back to 1-based line/column pairs.
class SourceMap {
 public:
  SourceMap() = default;
  SourceMap(std::string path, std::string text)
      : path_(std::move(path)), text_(std::move(text)) {}

  std::pair<unsigned, unsigned> line_col(uint32_t offset) const {
    unsigned line = 1, col = 1;
    for (uint32_t i = 0; i < offset && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

  std::string render(const Diag& d) const {
    auto [line, col] = line_col(d.span.begin);
    std::string where = path_.empty() ? std::string("<input>") : path_;
    return where + ":" + std::to_string(line) + ":" + std::to_string(col) +
           ": error: " + d.what();
  }

  const std::string& text() const { return text_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string text_;
};

}  // namespace rk
