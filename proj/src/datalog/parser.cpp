#include "iirs/datalog.hpp"

#include <cctype>
#include <set>

namespace iirs::datalog {

namespace {

bool is_bare_identifier(std::string_view text) {
  if (text.empty() || !std::islower(static_cast<unsigned char>(text[0])))
    return false;
  for (char c : text)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
      return false;
  return true;
}

bool is_integer(std::string_view text) {
  if (text.empty())
    return false;
  for (char c : text)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      return false;
  return true;
}

struct Token {
  enum class Kind { identifier, variable, integer, quoted, lparen, rparen, comma, dot, implies, end };
  Kind kind = Kind::end;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space_and_comments();
    Token tok;
    tok.line = line_;
    tok.column = column_;
    if (pos_ >= text_.size())
      return tok;
    char c = text_[pos_];
    auto single = [&](Token::Kind kind) {
      tok.kind = kind;
      tok.text = std::string(1, c);
      advance();
      return tok;
    };
    switch (c) {
    case '(': return single(Token::Kind::lparen);
    case ')': return single(Token::Kind::rparen);
    case ',': return single(Token::Kind::comma);
    case '.': return single(Token::Kind::dot);
    case ':':
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
        advance();
        advance();
        tok.kind = Token::Kind::implies;
        tok.text = ":-";
        return tok;
      }
      throw ParseError("expected ':-'", line_, column_);
    case '\'': return quoted(tok);
    default: break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        tok.text += text_[pos_];
        advance();
      }
      tok.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_') ? Token::Kind::variable
                                                                            : Token::Kind::identifier;
      return tok;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        tok.text += text_[pos_];
        advance();
      }
      tok.kind = Token::Kind::integer;
      return tok;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
  }

private:
  Token quoted(Token& tok) {
    advance();
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n')
        throw ParseError("unterminated quoted atom", tok.line, tok.column);
      char c = text_[pos_];
      if (c == '\'') {
        advance();
        break;
      }
      if (c == '\\' && pos_ + 1 < text_.size()) {
        advance();
        c = text_[pos_];
      }
      tok.text += c;
      advance();
    }
    tok.kind = Token::Kind::quoted;
    return tok;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n')
          advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
public:
  explicit Parser(std::string_view text) : lexer_(text) { tok_ = lexer_.next(); }

  Program program() {
    Program prog;
    while (tok_.kind != Token::Kind::end) {
      Token start = tok_;
      Atom head = atom();
      if (tok_.kind == Token::Kind::dot) {
        shift();
        if (!head.ground())
          throw ParseError("fact " + head.str() + " contains a variable", start.line, start.column);
        prog.facts.insert(std::move(head));
        continue;
      }
      expect(Token::Kind::implies, "'.' or ':-'");
      Rule rule;
      rule.label = "R" + std::to_string(prog.rules.size() + 1);
      rule.head = std::move(head);
      rule.body.push_back(atom());
      while (tok_.kind == Token::Kind::comma) {
        shift();
        rule.body.push_back(atom());
      }
      expect(Token::Kind::dot, "'.'");
      check_range_restriction(rule, start);
      prog.rules.push_back(std::move(rule));
    }
    return prog;
  }

  Atom single_atom() {
    Token start = tok_;
    Atom a = atom();
    if (tok_.kind == Token::Kind::dot)
      shift();
    if (tok_.kind != Token::Kind::end)
      throw ParseError("trailing input after atom", tok_.line, tok_.column);
    if (!a.ground())
      throw ParseError("atom " + a.str() + " is not ground", start.line, start.column);
    return a;
  }

private:
  Atom atom() {
    if (tok_.kind != Token::Kind::identifier)
      throw ParseError("expected predicate name", tok_.line, tok_.column);
    Atom a;
    a.predicate = tok_.text;
    shift();
    if (tok_.kind != Token::Kind::lparen)
      return a;
    shift();
    a.args.push_back(term());
    while (tok_.kind == Token::Kind::comma) {
      shift();
      a.args.push_back(term());
    }
    expect(Token::Kind::rparen, "')'");
    return a;
  }

  Term term() {
    Term t;
    switch (tok_.kind) {
    case Token::Kind::identifier:
    case Token::Kind::integer:
    case Token::Kind::quoted:
      t = Term::constant(tok_.text);
      break;
    case Token::Kind::variable:
      // Every '_' is a distinct variable.
      t = Term::variable(tok_.text == "_" ? "_#" + std::to_string(anon_++) : tok_.text);
      break;
    default:
      throw ParseError("expected a term", tok_.line, tok_.column);
    }
    shift();
    return t;
  }

  void check_range_restriction(const Rule& rule, const Token& at) {
    std::set<std::string> bound;
    for (const auto& b : rule.body)
      for (const auto& t : b.args)
        if (t.is_variable())
          bound.insert(t.text);
    for (const auto& t : rule.head.args) {
      if (!t.is_variable())
        continue;
      if (t.text.starts_with("_#"))
        throw ParseError("rule " + rule.label + ": anonymous variable in head", at.line, at.column);
      if (!bound.contains(t.text))
        throw ParseError("rule " + rule.label + " is not range-restricted: head variable " + t.text +
                             " does not occur in the body",
                         at.line, at.column);
    }
  }

  void expect(Token::Kind kind, const char* what) {
    if (tok_.kind != kind)
      throw ParseError(std::string("expected ") + what, tok_.line, tok_.column);
    shift();
  }

  void shift() { tok_ = lexer_.next(); }

  Lexer lexer_;
  Token tok_;
  int anon_ = 0;
};

} // namespace

ParseError::ParseError(std::string message, int line, int column)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message), line_(line),
      column_(column) {}

std::string render_constant(std::string_view text) {
  if (is_bare_identifier(text) || is_integer(text))
    return std::string(text);
  std::string out = "'";
  for (char c : text) {
    if (c == '\'' || c == '\\')
      out += '\\';
    out += c;
  }
  out += '\'';
  return out;
}

bool Atom::ground() const {
  for (const auto& t : args)
    if (t.is_variable())
      return false;
  return true;
}

std::string Atom::str() const {
  std::string out = predicate;
  if (args.empty())
    return out;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i)
      out += ", ";
    const auto& t = args[i];
    if (t.is_variable())
      out += t.text.starts_with("_#") ? "_" : t.text;
    else
      out += render_constant(t.text);
  }
  out += ')';
  return out;
}

std::string Rule::str() const {
  std::string out = head.str() + " :- ";
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i)
      out += ", ";
    out += body[i].str();
  }
  return out + ".";
}

Program parse_program(std::string_view text) { return Parser(text).program(); }

Atom parse_atom(std::string_view text) { return Parser(text).single_atom(); }

std::string_view builtin_rules_text() {
  return R"(% Remote exploitation chain.
netAccess(H2, Proto, Port) :- attackerLocated(Z), hacl(Z, H2, Proto, Port).
netAccess(H2, Proto, Port) :- execCode(H1, _), hacl(H1, H2, Proto, Port).
execCode(H, User) :- netAccess(H, Proto, Port), networkServiceInfo(H, Prog, Proto, Port, User), vulExists(H, VulnId, Prog, remote, privEscalation).
)";
}

Program builtin_rules() { return parse_program(builtin_rules_text()); }

} // namespace iirs::datalog
