// Copyright 2026 The Memoprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Lossless lexical analysis for the supported source languages. The lexer
// only classifies tokens; it does not parse. Concatenating the text of the
// returned tokens always reproduces the input.

#ifndef MEMOPROBE_LEXER_HPP_
#define MEMOPROBE_LEXER_HPP_

#include <array>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "memoprobe/error.hpp"

namespace memoprobe {

enum class TokenKind {
  kIdentifier,
  kKeyword,
  kLiteral,
  kString,
  kComment,
  kOperator,
  kPunctuation,
  kWhitespace,
};

inline std::string_view ToString(TokenKind kind) {
  switch (kind) {
    case TokenKind::kIdentifier: return "identifier";
    case TokenKind::kKeyword: return "keyword";
    case TokenKind::kLiteral: return "literal";
    case TokenKind::kString: return "string";
    case TokenKind::kComment: return "comment";
    case TokenKind::kOperator: return "operator";
    case TokenKind::kPunctuation: return "punctuation";
    case TokenKind::kWhitespace: return "whitespace";
  }
  return "";
}

struct CodeToken {
  TokenKind kind;
  std::string text;
  std::size_t begin = 0;  // byte offset into the source
  std::size_t end = 0;

  bool operator==(const CodeToken&) const = default;
};

enum class Language { kPython, kJava, kC, kCpp, kJavaScript, kGo };

struct LanguageRules {
  Language language = Language::kPython;
  std::string_view tag;
  std::set<std::string, std::less<>> keywords;
  // Predeclared names that renaming must leave alone.
  std::set<std::string, std::less<>> builtins;
  bool hash_comments = false;      // python
  bool slash_comments = true;      // everything else
  bool triple_quotes = false;      // python, java text blocks
  bool backtick_strings = false;   // javascript templates, go raw strings
  bool preprocessor = false;       // c, cpp
  bool dollar_in_identifiers = false;
};

namespace detail {

inline LanguageRules MakePython() {
  LanguageRules r;
  r.language = Language::kPython;
  r.tag = "python";
  r.keywords = {"False", "None", "True", "and", "as", "assert", "async", "await",
                "break", "class", "continue", "def", "del", "elif", "else", "except",
                "finally", "for", "from", "global", "if", "import", "in", "is",
                "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
                "while", "with", "yield"};
  r.builtins = {"abs", "all", "any", "ascii", "bin", "bool", "breakpoint", "bytearray",
                "bytes", "callable", "chr", "classmethod", "compile", "complex",
                "delattr", "dict", "dir", "divmod", "enumerate", "eval", "exec",
                "filter", "float", "format", "frozenset", "getattr", "globals",
                "hasattr", "hash", "help", "hex", "id", "input", "int", "isinstance",
                "issubclass", "iter", "len", "list", "locals", "map", "max",
                "memoryview", "min", "next", "object", "oct", "open", "ord", "pow",
                "print", "property", "range", "repr", "reversed", "round", "set",
                "setattr", "slice", "sorted", "staticmethod", "str", "sum", "super",
                "tuple", "type", "vars", "zip", "__import__", "__name__", "__init__",
                "__main__", "self", "cls", "Exception", "ValueError", "TypeError",
                "KeyError", "IndexError", "StopIteration", "RuntimeError",
                "NotImplementedError", "AssertionError", "ZeroDivisionError",
                "AttributeError", "NotImplemented", "Ellipsis"};
  r.hash_comments = true;
  r.slash_comments = false;
  r.triple_quotes = true;
  return r;
}

inline std::set<std::string, std::less<>> CKeywords() {
  return {"auto", "break", "case", "char", "const", "continue", "default", "do",
          "double", "else", "enum", "extern", "float", "for", "goto", "if",
          "inline", "int", "long", "register", "restrict", "return", "short",
          "signed", "sizeof", "static", "struct", "switch", "typedef", "union",
          "unsigned", "void", "volatile", "while", "_Bool", "_Complex",
          "_Imaginary", "_Alignas", "_Alignof", "_Atomic", "_Generic",
          "_Noreturn", "_Static_assert", "_Thread_local", "bool", "true", "false"};
}

inline std::set<std::string, std::less<>> CBuiltins() {
  return {"main", "printf", "scanf", "malloc", "calloc", "realloc", "free", "memcpy",
          "memset", "memmove", "memcmp", "strlen", "strcpy", "strncpy", "strcmp",
          "strncmp", "strcat", "strchr", "strstr", "sprintf", "snprintf", "fprintf",
          "puts", "putchar", "getchar", "fgets", "fopen", "fclose", "fread", "fwrite",
          "stdin", "stdout", "stderr", "exit", "abort", "assert", "size_t", "NULL",
          "EOF", "FILE", "abs", "qsort", "atoi", "int8_t", "int16_t", "int32_t",
          "int64_t", "uint8_t", "uint16_t", "uint32_t", "uint64_t", "INT_MAX",
          "INT_MIN", "errno"};
}

inline LanguageRules MakeC() {
  LanguageRules r;
  r.language = Language::kC;
  r.tag = "c";
  r.keywords = CKeywords();
  r.builtins = CBuiltins();
  r.preprocessor = true;
  return r;
}

inline LanguageRules MakeCpp() {
  LanguageRules r;
  r.language = Language::kCpp;
  r.tag = "cpp";
  r.keywords = CKeywords();
  for (const char* k :
       {"alignas", "alignof", "and", "and_eq", "asm", "bitand", "bitor", "catch",
        "char8_t", "char16_t", "char32_t", "class", "compl", "concept", "consteval",
        "constexpr", "constinit", "const_cast", "co_await", "co_return", "co_yield",
        "decltype", "delete", "dynamic_cast", "explicit", "export", "friend",
        "mutable", "namespace", "new", "noexcept", "not", "not_eq", "nullptr",
        "operator", "or", "or_eq", "private", "protected", "public",
        "reinterpret_cast", "requires", "static_assert", "static_cast", "template",
        "this", "thread_local", "throw", "try", "typeid", "typename", "using",
        "virtual", "wchar_t", "xor", "xor_eq", "override", "final"}) {
    r.keywords.insert(k);
  }
  r.builtins = CBuiltins();
  for (const char* b : {"std", "cout", "cin", "cerr", "endl", "string", "vector", "map",
                        "set", "unordered_map", "unordered_set", "pair", "make_pair",
                        "begin", "end", "swap", "move", "sort", "min", "max", "size",
                        "push_back", "iostream", "array", "optional"}) {
    r.builtins.insert(b);
  }
  r.preprocessor = true;
  return r;
}

inline LanguageRules MakeJava() {
  LanguageRules r;
  r.language = Language::kJava;
  r.tag = "java";
  r.keywords = {"abstract", "assert", "boolean", "break", "byte", "case", "catch",
                "char", "class", "const", "continue", "default", "do", "double",
                "else", "enum", "extends", "final", "finally", "float", "for", "goto",
                "if", "implements", "import", "instanceof", "int", "interface", "long",
                "native", "new", "package", "private", "protected", "public", "return",
                "short", "static", "strictfp", "super", "switch", "synchronized",
                "this", "throw", "throws", "transient", "try", "void", "volatile",
                "while", "true", "false", "null", "var", "record", "yield"};
  r.builtins = {"main", "String", "System", "Object", "Integer", "Long", "Double",
                "Float", "Boolean", "Character", "Byte", "Short", "Math", "List",
                "ArrayList", "LinkedList", "Map", "HashMap", "TreeMap", "Set",
                "HashSet", "TreeSet", "Arrays", "Collections", "Exception",
                "RuntimeException", "IllegalArgumentException",
                "IllegalStateException", "NullPointerException",
                "IndexOutOfBoundsException", "StringBuilder", "Iterator", "Iterable",
                "Comparable", "Comparator", "Override", "Optional", "Thread",
                "Deque", "ArrayDeque", "Queue", "PriorityQueue"};
  r.triple_quotes = true;
  return r;
}

inline LanguageRules MakeJavaScript() {
  LanguageRules r;
  r.language = Language::kJavaScript;
  r.tag = "javascript";
  r.keywords = {"break", "case", "catch", "class", "const", "continue", "debugger",
                "default", "delete", "do", "else", "export", "extends", "finally",
                "for", "function", "if", "import", "in", "instanceof", "let", "new",
                "return", "super", "switch", "this", "throw", "try", "typeof", "var",
                "void", "while", "with", "yield", "async", "await", "of", "static",
                "true", "false", "null", "undefined", "NaN", "Infinity"};
  r.builtins = {"console", "Math", "JSON", "Object", "Array", "String", "Number",
                "Boolean", "Promise", "Map", "Set", "Date", "Error", "TypeError",
                "RangeError", "RegExp", "Symbol", "BigInt", "parseInt", "parseFloat",
                "isNaN", "isFinite", "require", "module", "exports", "window",
                "document", "globalThis", "setTimeout", "setInterval", "arguments",
                "constructor", "prototype"};
  r.backtick_strings = true;
  r.dollar_in_identifiers = true;
  return r;
}

inline LanguageRules MakeGo() {
  LanguageRules r;
  r.language = Language::kGo;
  r.tag = "go";
  r.keywords = {"break", "case", "chan", "const", "continue", "default", "defer",
                "else", "fallthrough", "for", "func", "go", "goto", "if", "import",
                "interface", "map", "package", "range", "return", "select", "struct",
                "switch", "type", "var"};
  r.builtins = {"bool", "byte", "complex64", "complex128", "error", "float32",
                "float64", "int", "int8", "int16", "int32", "int64", "rune", "string",
                "uint", "uint8", "uint16", "uint32", "uint64", "uintptr", "true",
                "false", "iota", "nil", "append", "cap", "close", "complex", "copy",
                "delete", "imag", "len", "make", "new", "panic", "print", "println",
                "real", "recover", "main", "fmt", "any", "comparable", "min", "max",
                "clear"};
  r.backtick_strings = true;
  return r;
}

}  // namespace detail

// Throws kUnsupported for tags without a lexer ("text" included).
inline const LanguageRules& RulesFor(std::string_view tag) {
  static const std::array<LanguageRules, 6> all = {
      detail::MakePython(), detail::MakeJava(), detail::MakeC(),
      detail::MakeCpp(), detail::MakeJavaScript(), detail::MakeGo()};
  for (const auto& r : all) {
    if (r.tag == tag) return r;
  }
  throw Error(ErrorCode::kUnsupported,
              "no lexer for language \"" + std::string(tag) + "\"");
}

inline bool HasLexer(std::string_view tag) {
  return tag == "python" || tag == "java" || tag == "c" || tag == "cpp" ||
         tag == "javascript" || tag == "go";
}

namespace detail {

class Lexer {
 public:
  Lexer(std::string_view src, const LanguageRules& rules) : src_(src), rules_(rules) {}

  std::vector<CodeToken> Run() {
    while (pos_ < src_.size()) Step();
    return std::move(tokens_);
  }

 private:
  char At(std::size_t i) const { return i < src_.size() ? src_[i] : '\0'; }

  static bool IsSpace(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }
  static bool IsDigit(char c) { return c >= '0' && c <= '9'; }
  bool IsIdentStart(char c) const {
    const auto u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || u >= 0x80 ||
           (c == '$' && rules_.dollar_in_identifiers);
  }
  bool IsIdentChar(char c) const { return IsIdentStart(c) || IsDigit(c); }

  void Emit(TokenKind kind, std::size_t end) {
    tokens_.push_back({kind, std::string(src_.substr(pos_, end - pos_)), pos_, end});
    pos_ = end;
  }

  bool AtLineStart() const {
    std::size_t i = pos_;
    while (i > 0) {
      const char c = src_[i - 1];
      if (c == '\n') return true;
      if (c != ' ' && c != '\t') return false;
      --i;
    }
    return true;
  }

  void Step() {
    const char c = src_[pos_];
    if (IsSpace(c) || (c == '\\' && (At(pos_ + 1) == '\n' || At(pos_ + 1) == '\r'))) {
      std::size_t e = pos_;
      while (e < src_.size()) {
        if (IsSpace(src_[e])) {
          ++e;
        } else if (src_[e] == '\\' && (At(e + 1) == '\n' || At(e + 1) == '\r')) {
          e += 2;
        } else {
          break;
        }
      }
      Emit(TokenKind::kWhitespace, e);
      return;
    }
    if (rules_.hash_comments && c == '#') {
      Emit(TokenKind::kComment, LineEnd(pos_));
      return;
    }
    if (rules_.slash_comments && c == '/' && At(pos_ + 1) == '/') {
      Emit(TokenKind::kComment, LineEnd(pos_));
      return;
    }
    if (rules_.slash_comments && c == '/' && At(pos_ + 1) == '*') {
      std::size_t e = src_.find("*/", pos_ + 2);
      Emit(TokenKind::kComment, e == std::string_view::npos ? src_.size() : e + 2);
      return;
    }
    if (rules_.preprocessor && c == '#' && AtLineStart()) {
      LexDirective();
      return;
    }
    if (IsDigit(c) || (c == '.' && IsDigit(At(pos_ + 1)))) {
      LexNumber();
      return;
    }
    if (IsIdentStart(c)) {
      LexWord();
      return;
    }
    if (c == '"' || c == '\'') {
      Emit(TokenKind::kString, QuotedEnd(pos_));
      return;
    }
    if (c == '`' && rules_.backtick_strings) {
      Emit(TokenKind::kString, BacktickEnd(pos_));
      return;
    }
    LexOperator();
  }

  std::size_t LineEnd(std::size_t from) const {
    std::size_t e = src_.find('\n', from);
    if (e == std::string_view::npos) return src_.size();
    if (e > from && src_[e - 1] == '\r') return e - 1;
    return e;
  }

  // `start` points at the opening quote (after any prefix).
  std::size_t QuotedEnd(std::size_t start) const {
    const char q = src_[start];
    if (rules_.triple_quotes && At(start + 1) == q && At(start + 2) == q) {
      const std::string closing(3, q);
      std::size_t i = start + 3;
      while (i < src_.size()) {
        if (src_[i] == '\\') {
          i += 2;
          continue;
        }
        if (src_.compare(i, 3, closing) == 0) return i + 3;
        ++i;
      }
      return src_.size();
    }
    std::size_t i = start + 1;
    while (i < src_.size()) {
      const char c = src_[i];
      if (c == '\\') {
        i += 2;
        continue;
      }
      if (c == q) return i + 1;
      if (c == '\n') return i;  // unterminated: stop at end of line
      ++i;
    }
    return src_.size();
  }

  std::size_t BacktickEnd(std::size_t start) const {
    std::size_t i = start + 1;
    const bool escapes = rules_.language == Language::kJavaScript;
    while (i < src_.size()) {
      if (escapes && src_[i] == '\\') {
        i += 2;
        continue;
      }
      if (src_[i] == '`') return i + 1;
      ++i;
    }
    return src_.size();
  }

  // C++ raw string: R"delim( ... )delim". `quote` points at the quote.
  std::size_t RawStringEnd(std::size_t quote) const {
    const std::size_t open = src_.find('(', quote + 1);
    if (open == std::string_view::npos || open - quote - 1 > 16) return QuotedEnd(quote);
    const std::string closing =
        ")" + std::string(src_.substr(quote + 1, open - quote - 1)) + "\"";
    const std::size_t e = src_.find(closing, open + 1);
    return e == std::string_view::npos ? src_.size() : e + closing.size();
  }

  void LexNumber() {
    std::size_t e = pos_;
    while (e < src_.size()) {
      const char c = src_[e];
      if (IsDigit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
        ++e;
      } else if (c == '.' && At(e + 1) != '.') {
        ++e;
      } else if ((c == '+' || c == '-') && e > pos_) {
        const char prev = src_[e - 1];
        const bool hex = src_.size() > pos_ + 1 && src_[pos_] == '0' &&
                         (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X');
        if ((!hex && (prev == 'e' || prev == 'E')) || (hex && (prev == 'p' || prev == 'P'))) {
          ++e;
        } else {
          break;
        }
      } else if (c == '\'' && rules_.language == Language::kCpp && IsDigit(At(e + 1))) {
        ++e;  // digit separator
      } else {
        break;
      }
    }
    Emit(TokenKind::kLiteral, e);
  }

  bool IsStringPrefix(std::string_view word) const {
    switch (rules_.language) {
      case Language::kPython: {
        if (word.size() > 2) return false;
        for (char ch : word) {
          const char l = static_cast<char>(ch | 0x20);
          if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
        }
        return true;
      }
      case Language::kC:
      case Language::kCpp:
        return word == "L" || word == "u" || word == "U" || word == "u8" || word == "R" ||
               word == "LR" || word == "uR" || word == "UR" || word == "u8R";
      default:
        return false;
    }
  }

  void LexWord() {
    std::size_t e = pos_;
    while (e < src_.size() && IsIdentChar(src_[e])) ++e;
    const std::string_view word = src_.substr(pos_, e - pos_);
    const char next = At(e);
    if ((next == '"' || next == '\'') && IsStringPrefix(word)) {
      if (rules_.language == Language::kCpp && word.back() == 'R' && next == '"') {
        Emit(TokenKind::kString, RawStringEnd(e));
      } else {
        Emit(TokenKind::kString, QuotedEnd(e));
      }
      return;
    }
    Emit(rules_.keywords.count(word) ? TokenKind::kKeyword : TokenKind::kIdentifier, e);
  }

  void LexDirective() {
    std::size_t e = pos_ + 1;
    while (e < src_.size() && (src_[e] == ' ' || src_[e] == '\t')) ++e;
    const std::size_t name_begin = e;
    while (e < src_.size() && IsIdentChar(src_[e])) ++e;
    const std::string_view name = src_.substr(name_begin, e - name_begin);
    Emit(TokenKind::kKeyword, e);
    if (name != "include" && name != "import") return;
    std::size_t w = pos_;
    while (w < src_.size() && (src_[w] == ' ' || src_[w] == '\t')) ++w;
    if (w > pos_) Emit(TokenKind::kWhitespace, w);
    if (At(pos_) == '<') {
      std::size_t close = src_.find('>', pos_);
      const std::size_t line_end = LineEnd(pos_);
      Emit(TokenKind::kString,
           close == std::string_view::npos || close > line_end ? line_end : close + 1);
    }
  }

  void LexOperator() {
    static constexpr std::string_view kOps[] = {
        ">>>=", "<<=", ">>=", ">>>", "...", "**=", "//=", "===", "!==", "<=>", "->*",
        "&&=", "||=", "?\?=", "&^=", "::", "->", "=>", "++", "--", "<<", ">>", "<=",
        ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
        "**", "//", "?.", "??", ":=", "<-", "&^", ".*"};
    for (std::string_view op : kOps) {
      if (src_.compare(pos_, op.size(), op) == 0) {
        if (op == "//" && rules_.language != Language::kPython) continue;
        if ((op == ":=" || op == "<-" || op == "&^" || op == "&^=") &&
            rules_.language != Language::kGo && !(op == ":=" && rules_.language == Language::kPython)) {
          continue;
        }
        Emit(TokenKind::kOperator, pos_ + op.size());
        return;
      }
    }
    const char c = src_[pos_];
    const bool punct = c == '(' || c == ')' || c == '[' || c == ']' || c == '{' ||
                       c == '}' || c == ',' || c == ';' || c == '.' || c == ':';
    Emit(punct ? TokenKind::kPunctuation : TokenKind::kOperator, pos_ + 1);
  }

  std::string_view src_;
  const LanguageRules& rules_;
  std::size_t pos_ = 0;
  std::vector<CodeToken> tokens_;
};

}  // namespace detail

inline std::vector<CodeToken> tokenize_code(std::string_view source, std::string_view language) {
  const LanguageRules& rules = RulesFor(language);
  return detail::Lexer(source, rules).Run();
}

inline bool IsSignificant(TokenKind kind) {
  return kind != TokenKind::kWhitespace && kind != TokenKind::kComment;
}

}  // namespace memoprobe

#endif  // MEMOPROBE_LEXER_HPP_
