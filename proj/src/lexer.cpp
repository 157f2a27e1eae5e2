#include "cflpfd/lexer.hpp"

#include <cctype>
#include <map>

namespace cflpfd {

namespace {

bool is_sym_char(char c) {
  switch (c) {
    case '!':
    case '#':
    case '$':
    case '&':
    case '*':
    case '+':
    case '.':
    case '/':
    case '<':
    case '=':
    case '>':
    case '?':
    case '@':
    case '\\':
    case '^':
    case '|':
    case '-':
    case '~':
    case ':':
      return true;
    default:
      return false;
  }
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

const std::map<std::string, Tok>& keywords() {
  static const std::map<std::string, Tok> kw = {
      {"include", Tok::KwInclude}, {"data", Tok::KwData},
      {"type", Tok::KwType},       {"infix", Tok::KwInfix},
      {"infixl", Tok::KwInfixl},   {"infixr", Tok::KwInfixr},
  };
  return kw;
}

bool ends_expression(const Token& t) {
  switch (t.kind) {
    case Tok::Ident:
    case Tok::Var:
    case Tok::Int:
    case Tok::String:
    case Tok::RParen:
    case Tok::RBracket:
      return true;
    default:
      return false;
  }
}

}  // namespace

LexResult lex(const std::string& text) {
  LexResult out;
  size_t i = 0;
  int line = 1, col = 1;

  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
    }
    i += n;
  };
  auto push = [&](Tok kind, const std::string& s, int l, int c) {
    Token t;
    t.kind = kind;
    t.text = s;
    t.line = l;
    t.col = c;
    out.tokens.push_back(std::move(t));
  };

  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '%') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    const int tl = line, tc = col;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[j])))
        j++;
      Token t;
      t.kind = Tok::Int;
      t.text = text.substr(i, j - i);
      t.ival = std::stoll(t.text);
      t.line = tl;
      t.col = tc;
      out.tokens.push_back(std::move(t));
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) j++;
      std::string word = text.substr(i, j - i);
      bool upper = std::isupper(static_cast<unsigned char>(c)) || c == '_';
      auto kw = keywords().find(word);
      if (!upper && kw != keywords().end()) {
        push(kw->second, word, tl, tc);
      } else {
        push(upper ? Tok::Var : Tok::Ident, word, tl, tc);
      }
      advance(j - i);
      continue;
    }
    if (c == '"') {
      size_t j = i + 1;
      while (j < text.size() && text[j] != '"' && text[j] != '\n') j++;
      if (j >= text.size() || text[j] != '"') {
        out.ok = false;
        out.error = "unterminated string literal";
        out.line = tl;
        out.col = tc;
        break;
      }
      push(Tok::String, text.substr(i + 1, j - i - 1), tl, tc);
      advance(j + 1 - i);
      continue;
    }
    switch (c) {
      case '(':
        push(Tok::LParen, "(", tl, tc);
        advance(1);
        continue;
      case ')':
        push(Tok::RParen, ")", tl, tc);
        advance(1);
        continue;
      case '[':
        push(Tok::LBracket, "[", tl, tc);
        advance(1);
        continue;
      case ']':
        push(Tok::RBracket, "]", tl, tc);
        advance(1);
        continue;
      case ',':
        push(Tok::Comma, ",", tl, tc);
        advance(1);
        continue;
      default:
        break;
    }
    if (is_sym_char(c)) {
      // Negative literal: '-' directly before a digit where no expression
      // just ended (start of input, after an operator, '(' '[' or ',').
      if (c == '-' && i + 1 < text.size() &&
          std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
          (out.tokens.empty() || !ends_expression(out.tokens.back()))) {
        size_t j = i + 1;
        while (j < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[j])))
          j++;
        Token t;
        t.kind = Tok::Int;
        t.text = text.substr(i, j - i);
        t.ival = std::stoll(t.text);
        t.line = tl;
        t.col = tc;
        out.tokens.push_back(std::move(t));
        advance(j - i);
        continue;
      }
      size_t j = i;
      while (j < text.size() && is_sym_char(text[j])) j++;
      std::string op = text.substr(i, j - i);
      // An all-dash run of length >= 2 is a line comment.
      if (op.size() >= 2 && op.find_first_not_of('-') == std::string::npos) {
        while (i < text.size() && text[i] != '\n') advance(1);
        continue;
      }
      push(Tok::Op, op, tl, tc);
      advance(j - i);
      continue;
    }
    out.ok = false;
    out.error = std::string("unexpected character '") + c + "'";
    out.line = tl;
    out.col = tc;
    break;
  }

  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.col = col;
  out.tokens.push_back(std::move(end));
  return out;
}

}  // namespace cflpfd
