#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <vector>

#include "odestab/error.hpp"
#include "odestab/system.hpp"

namespace odestab {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::optional<Op> function_op(std::string_view name) {
    if (name == "sin") return Op::Sin;
    if (name == "cos") return Op::Cos;
    if (name == "tan") return Op::Tan;
    if (name == "exp") return Op::Exp;
    if (name == "ln") return Op::Ln;
    if (name == "sqrt") return Op::Sqrt;
    if (name == "tanh") return Op::Tanh;
    return std::nullopt;
}

struct Token {
    enum Kind { Number, Ident, Sym, End } kind;
    std::string text;
    double value = 0.0;
    int col = 0;  // 1-based within the line
};

// Tokenizes one line (or a tail of it) of expression text.
class Lexer {
public:
    Lexer(std::string_view line, int line_no, int start_col)
        : line_(line), line_no_(line_no), pos_(static_cast<std::size_t>(start_col - 1)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            if (pos_ >= line_.size()) {
                out.push_back({Token::End, "", 0.0, static_cast<int>(pos_) + 1});
                return out;
            }
            char c = line_[pos_];
            int col = static_cast<int>(pos_) + 1;
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && pos_ + 1 < line_.size() &&
                 std::isdigit(static_cast<unsigned char>(line_[pos_ + 1])))) {
                out.push_back(lex_number(col));
            } else if (ident_start(c)) {
                std::size_t start = pos_;
                while (pos_ < line_.size() && ident_char(line_[pos_])) ++pos_;
                out.push_back({Token::Ident, std::string(line_.substr(start, pos_ - start)), 0.0, col});
            } else if (std::string_view("+-*/^(),=").find(c) != std::string_view::npos) {
                ++pos_;
                out.push_back({Token::Sym, std::string(1, c), 0.0, col});
            } else {
                throw ParseError(std::string("unexpected character '") + c + "'", line_no_, col);
            }
        }
    }

private:
    void skip_space() {
        while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r'))
            ++pos_;
    }

    Token lex_number(int col) {
        std::size_t start = pos_;
        while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
        if (pos_ < line_.size() && line_[pos_] == '.') {
            ++pos_;
            while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
        }
        if (pos_ < line_.size() && (line_[pos_] == 'e' || line_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < line_.size() && (line_[pos_] == '+' || line_[pos_] == '-')) ++pos_;
            if (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) {
                while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
            } else {
                pos_ = mark;  // 'e' belongs to a following identifier
            }
        }
        std::string_view text = line_.substr(start, pos_ - start);
        double v = 0.0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size())
            throw ParseError("malformed number '" + std::string(text) + "'", line_no_, col);
        return {Token::Number, std::string(text), v, col};
    }

    std::string_view line_;
    int line_no_;
    std::size_t pos_ = 0;
};

// Recursive descent over the token list. Precedence low to high:
// +- then */ then ^ (right-associative) over unary minus.
class ExprParser {
public:
    ExprParser(std::vector<Token> tokens, int line_no)
        : toks_(std::move(tokens)), line_(line_no) {}

    ExprPtr parse_full() {
        ExprPtr e = parse_expr();
        if (cur().kind != Token::End)
            throw ParseError("unexpected '" + cur().text + "'", line_, cur().col);
        return e;
    }

private:
    const Token& cur() const { return toks_[i_]; }
    void advance() { ++i_; }

    bool accept_sym(const char* s) {
        if (cur().kind == Token::Sym && cur().text == s) {
            advance();
            return true;
        }
        return false;
    }

    void expect_sym(const char* s) {
        if (!accept_sym(s))
            throw ParseError(std::string("expected '") + s + "'", line_, cur().col);
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            if (accept_sym("+")) e = add(e, parse_term());
            else if (accept_sym("-")) e = sub(e, parse_term());
            else return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            if (accept_sym("*")) e = mul(e, parse_factor());
            else if (accept_sym("/")) e = div(e, parse_factor());
            else return e;
        }
    }

    // unary minus binds looser than '^': -x^2 reads as -(x^2), x^-2 still works
    ExprPtr parse_factor() {
        if (accept_sym("-")) {
            ExprPtr child = parse_factor();
            // fold a negated literal into a negative constant
            if (child->op == Op::Constant) return constant(-child->value);
            return neg(child);
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (accept_sym("^")) return pow(base, parse_factor());
        return base;
    }

    ExprPtr parse_atom() {
        const Token& t = cur();
        switch (t.kind) {
            case Token::Number: {
                advance();
                return constant(t.value);
            }
            case Token::Ident: {
                advance();
                if (auto fn = function_op(t.text)) {
                    expect_sym("(");
                    ExprPtr arg = parse_expr();
                    expect_sym(")");
                    return call(*fn, arg);
                }
                return variable(t.text);
            }
            case Token::Sym:
                if (t.text == "(") {
                    advance();
                    ExprPtr e = parse_expr();
                    expect_sym(")");
                    return e;
                }
                throw ParseError("unexpected '" + t.text + "'", line_, t.col);
            case Token::End:
                throw ParseError("unexpected end of input, expected expression", line_, t.col);
        }
        throw ParseError("unexpected token", line_, t.col);
    }

    std::vector<Token> toks_;
    int line_;
    std::size_t i_ = 0;
};

struct Line {
    std::string text;
    int no;
};

std::string strip_comment(std::string_view s) {
    auto hash = s.find('#');
    std::string out(hash == std::string_view::npos ? s : s.substr(0, hash));
    while (!out.empty() && (out.back() == ' ' || out.back() == '\t' || out.back() == '\r'))
        out.pop_back();
    return out;
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

std::string first_word(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return s.substr(start, pos - start);
}

std::string expect_ident_token(const Line& ln, const std::vector<Token>& toks, std::size_t idx,
                               const char* what) {
    if (idx >= toks.size() || toks[idx].kind != Token::Ident)
        throw ParseError(std::string("expected ") + what, ln.no,
                         idx < toks.size() ? toks[idx].col : 1);
    if (function_op(toks[idx].text))
        throw ParseError("'" + toks[idx].text + "' is a reserved function name", ln.no,
                         toks[idx].col);
    return toks[idx].text;
}

}  // namespace

SystemDef parse_system(std::string_view source) {
    std::optional<std::string> sys_name;
    int sys_line = 0;
    std::vector<std::pair<std::string, double>> params;
    std::vector<std::string> states;
    bool have_states = false;
    struct Equation {
        std::string state;
        ExprPtr expr;
        int line;
        int col;
    };
    std::vector<Equation> equations;

    int line_no = 0;
    std::size_t start = 0;
    int last_line = 1;
    while (start <= source.size()) {
        std::size_t nl = source.find('\n', start);
        std::string_view raw = source.substr(
            start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        ++line_no;
        std::string text = strip_comment(raw);
        start = (nl == std::string_view::npos) ? source.size() + 1 : nl + 1;
        if (is_blank(text)) continue;
        last_line = line_no;
        Line ln{text, line_no};

        std::size_t pos = 0;
        std::string word = first_word(text, pos);
        int word_col = static_cast<int>(pos - word.size()) + 1;

        if (word == "system") {
            auto toks = Lexer(text, line_no, static_cast<int>(pos) + 1).run();
            std::string name = expect_ident_token(ln, toks, 0, "system name");
            if (toks.size() != 2 || toks[1].kind != Token::End)
                throw ParseError("unexpected text after system name", line_no, toks[1].col);
            if (sys_name) throw ParseError("duplicate system declaration", line_no, word_col);
            sys_name = name;
            sys_line = line_no;
        } else if (word == "param") {
            auto toks = Lexer(text, line_no, static_cast<int>(pos) + 1).run();
            std::string name = expect_ident_token(ln, toks, 0, "parameter name");
            std::size_t i = 1;
            if (i >= toks.size() || toks[i].kind != Token::Sym || toks[i].text != "=")
                throw ParseError("expected '=' after parameter name", line_no,
                                 i < toks.size() ? toks[i].col : 1);
            ++i;
            double sign = 1.0;
            if (i < toks.size() && toks[i].kind == Token::Sym &&
                (toks[i].text == "-" || toks[i].text == "+")) {
                if (toks[i].text == "-") sign = -1.0;
                ++i;
            }
            if (i >= toks.size() || toks[i].kind != Token::Number)
                throw ParseError("expected a number", line_no, i < toks.size() ? toks[i].col : 1);
            double value = sign * toks[i].value;
            ++i;
            if (i >= toks.size() || toks[i].kind != Token::End)
                throw ParseError("unexpected text after parameter value", line_no, toks[i].col);
            for (const auto& [p, v] : params) {
                (void)v;
                if (p == name)
                    throw ParseError("duplicate declaration of '" + name + "'", line_no, word_col);
            }
            params.emplace_back(name, value);
        } else if (word == "state") {
            if (have_states)
                throw ParseError("duplicate state declaration", line_no, word_col);
            have_states = true;
            auto toks = Lexer(text, line_no, static_cast<int>(pos) + 1).run();
            std::size_t i = 0;
            for (;;) {
                states.push_back(expect_ident_token(ln, toks, i, "state name"));
                ++i;
                if (i < toks.size() && toks[i].kind == Token::Sym && toks[i].text == ",") {
                    ++i;
                    continue;
                }
                break;
            }
            if (i >= toks.size() || toks[i].kind != Token::End)
                throw ParseError("unexpected '" + toks[i].text + "' in state list", line_no,
                                 toks[i].col);
        } else if (word.size() > 1 && word[0] == 'd' && word.find('/') != std::string::npos) {
            // d<ident>/dt = <expr>
            std::size_t slash = word.find('/');
            std::string state = word.substr(1, slash - 1);
            if (word.substr(slash) != "/dt" || state.empty())
                throw ParseError("malformed derivative declaration '" + word + "'", line_no,
                                 word_col);
            auto toks = Lexer(text, line_no, static_cast<int>(pos) + 1).run();
            if (toks.empty() || toks[0].kind != Token::Sym || toks[0].text != "=")
                throw ParseError("expected '=' after d" + state + "/dt", line_no,
                                 toks.empty() ? 1 : toks[0].col);
            ExprPtr expr =
                ExprParser(std::vector<Token>(toks.begin() + 1, toks.end()), line_no).parse_full();
            equations.push_back({state, expr, line_no, word_col});
        } else {
            throw ParseError("unrecognized declaration '" + word + "'", line_no, word_col);
        }
    }

    if (!sys_name) throw ParseError("missing system declaration", last_line, 1);
    if (!have_states) throw ParseError("missing state declaration", last_line, 1);

    for (const auto& eq : equations) {
        if (std::find(states.begin(), states.end(), eq.state) == states.end())
            throw ParseError("undeclared identifier '" + eq.state + "' in derivative", eq.line,
                             eq.col);
        int count = 0;
        for (const auto& other : equations)
            if (other.state == eq.state) ++count;
        if (count > 1)
            throw ParseError("duplicate declaration of d" + eq.state + "/dt", eq.line, eq.col);
    }
    if (equations.size() != states.size())
        throw ParseError("state count " + std::to_string(states.size()) +
                             " != equation count " + std::to_string(equations.size()),
                         last_line, 1);

    // identifier validation with line attribution, before SystemDef re-checks
    for (const auto& eq : equations) {
        for (const auto& v : free_variables(*eq.expr)) {
            bool known = std::find(states.begin(), states.end(), v) != states.end() ||
                         std::any_of(params.begin(), params.end(),
                                     [&](const auto& p) { return p.first == v; });
            if (!known)
                throw ParseError("undeclared identifier '" + v + "'", eq.line, eq.col);
        }
    }
    for (const auto& s : states)
        for (const auto& [p, v] : params) {
            (void)v;
            if (p == s)
                throw ParseError("'" + s + "' declared as both state and parameter", sys_line, 1);
        }

    std::vector<ExprPtr> rhs(states.size());
    for (const auto& eq : equations) {
        auto idx = static_cast<std::size_t>(
            std::find(states.begin(), states.end(), eq.state) - states.begin());
        rhs[idx] = eq.expr;
    }
    return SystemDef(*sys_name, states, params, rhs);
}

}  // namespace odestab
