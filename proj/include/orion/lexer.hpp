// Tokenizer shared by the Athena and Orion front ends.
#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "orion/errors.hpp"

namespace orion::text {

enum class Tok { Ident, Int, Punct, Regex, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;

  bool is(std::string_view p) const { return (kind == Tok::Punct || kind == Tok::Ident) && text == p; }
};

/// Whitespace-insensitive scanner with `//` line comments. Multi-char puncts: `::` and `..`.
class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  const Token& peek() {
    if (!cached_) cached_ = scan();
    return *cached_;
  }

  Token next() {
    Token t = peek();
    cached_.reset();
    return t;
  }

  bool accept(std::string_view p) {
    if (peek().is(p)) {
      next();
      return true;
    }
    return false;
  }

  Token expect(std::string_view p) {
    const Token& t = peek();
    if (!t.is(p)) fail("'" + std::string(p) + "'");
    return next();
  }

  Token expect_ident(std::string_view what = "identifier") {
    if (peek().kind != Tok::Ident) fail(std::string(what));
    return next();
  }

  long long expect_int(std::string_view what = "integer") {
    bool neg = accept("-");
    if (peek().kind != Tok::Int) fail(std::string(what));
    long long v = std::stoll(next().text);
    return neg ? -v : v;
  }

  bool at_end() { return peek().kind == Tok::End; }

  [[noreturn]] void fail(const std::string& expected) {
    const Token& t = peek();
    throw SyntaxError(t.line, t.column, expected, t.kind == Tok::End ? "end of input" : t.text);
  }

  /// Reads a `/pattern/` literal if one starts at the next token position.
  std::optional<Token> try_regex() {
    if (cached_) {
      pos_ = cached_start_;
      line_ = cached_->line;
      col_ = cached_->column;
      cached_.reset();
    }
    skip_trivia();
    if (pos_ >= src_.size() || src_[pos_] != '/' || (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/'))
      return std::nullopt;
    Token t{Tok::Regex, {}, line_, col_};
    advance();
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') throw SyntaxError(t.line, t.column, "closing '/' of regex");
      char c = src_[pos_];
      if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        t.text += '/';
        advance();
        advance();
        continue;
      }
      advance();
      if (c == '/') break;
      t.text += c;
    }
    return t;
  }

  std::size_t line() const { return line_; }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  Token scan() {
    skip_trivia();
    cached_start_ = pos_;
    Token t{Tok::End, {}, line_, col_};
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Ident;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        t.text += src_[pos_];
        advance();
      }
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Tok::Int;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        t.text += src_[pos_];
        advance();
      }
      return t;
    }
    t.kind = Tok::Punct;
    if ((c == ':' || c == '.') && pos_ + 1 < src_.size() && src_[pos_ + 1] == c) {
      t.text = std::string(2, c);
      advance();
      advance();
      return t;
    }
    if (static_cast<unsigned char>(c) >= 0x80 || !std::ispunct(static_cast<unsigned char>(c)))
      throw SyntaxError(line_, col_, "token", std::string(1, c));
    t.text = std::string(1, c);
    advance();
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
  std::optional<Token> cached_;
  std::size_t cached_start_ = 0;
};

}  // namespace orion::text
