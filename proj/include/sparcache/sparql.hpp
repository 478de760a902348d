#pragma once

// SPARQL SELECT subset: parser, pattern tree, triple-pattern typing and the
// canonical key used for identical-query detection.
//
// Supported: PREFIX, SELECT [DISTINCT] vars|*, WHERE with '.'-separated
// triple patterns (';'/',' lists are expanded), nested groups, OPTIONAL,
// UNION, FILTER (captured as opaque text), LIMIT/OFFSET/ORDER BY.
// Everything else (CONSTRUCT/ASK/DESCRIBE, SERVICE, GRAPH, VALUES, BIND,
// MINUS, subqueries, aggregates, property paths) is rejected with a
// ParseError; callers that need to serve such queries fall back to treating
// the raw text as an opaque key.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sparcache {

inline constexpr const char* kRdfTypeIri = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

enum class TermKind { Iri, Literal, Variable, BlankNode };

/// One RDF term position. For IRIs the lexical form is the absolute IRI
/// (prefixes already expanded); for variables it is the bare name without
/// '?'/'$'; for literals it is the unescaped content.
struct Term {
    TermKind kind = TermKind::Iri;
    std::string lexical;
    // Literal-only decorations.
    std::string langTag;      // without '@'
    std::string datatypeIri;  // expanded
    bool plainToken = false;  // numeric/boolean shorthand, serialized as-is

    bool operator==(const Term&) const = default;

    /// Blank nodes act as non-distinguished variables.
    bool isVariableLike() const { return kind == TermKind::Variable || kind == TermKind::BlankNode; }
};

struct TriplePattern {
    Term subject, predicate, object;
    bool operator==(const TriplePattern&) const = default;
};

/// Boundness type in {0..7}: 4*isVar(s) + 2*isVar(p) + isVar(o).
inline int tripleTypeId(const TriplePattern& tp) {
    return 4 * (tp.subject.isVariableLike() ? 1 : 0) +
           2 * (tp.predicate.isVariableLike() ? 1 : 0) +
           (tp.object.isVariableLike() ? 1 : 0);
}

enum class GroupKind { Group, Optional, UnionBranches };

/// Node of the pattern tree. UnionBranches nodes carry no direct patterns;
/// their children are the branch groups.
struct PatternGroup {
    GroupKind kind = GroupKind::Group;
    std::vector<TriplePattern> patterns;
    std::vector<PatternGroup> children;
    std::vector<std::string> filters;  // opaque constraint text

    bool operator==(const PatternGroup&) const = default;
};

struct Projection {
    bool star = false;
    std::vector<std::string> variables;
    bool operator==(const Projection&) const = default;
};

struct SolutionModifiers {
    bool distinct = false;
    std::optional<uint64_t> limit;
    std::optional<uint64_t> offset;
    std::string orderBy;  // opaque text after ORDER BY, empty if absent
    bool operator==(const SolutionModifiers&) const = default;
};

struct ParsedQuery {
    std::map<std::string, std::string> prefixes;  // as declared, informational
    Projection projection;
    PatternGroup tree;  // root group
    SolutionModifiers modifiers;
};

/// Structural equality ignoring the declared-prefix map (prefixes are already
/// expanded into the terms, so a reparse of the canonical form drops them).
inline bool structurallyEquals(const ParsedQuery& a, const ParsedQuery& b) {
    return a.projection == b.projection && a.tree == b.tree && a.modifiers == b.modifiers;
}

/// Stable cache key: the v1 canonical serialization of a query.
struct CanonicalKey {
    std::string text;
    bool operator==(const CanonicalKey&) const = default;
    auto operator<=>(const CanonicalKey&) const = default;
};

struct ParseError : std::runtime_error {
    size_t position;
    ParseError(size_t pos, const std::string& message)
        : std::runtime_error("parse error at offset " + std::to_string(pos) + ": " + message),
          position(pos) {}
};

namespace detail {

enum class Tok { Eof, IriRef, PName, Var, Str, Num, Blank, Word, Punct };

struct Token {
    Tok type = Tok::Eof;
    size_t pos = 0;
    std::string text;     // raw slice (or operator spelling)
    std::string content;  // unescaped string content / pname parts
    std::string extra;    // pname local part
};

inline bool wordChar(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }
    size_t offset() const { return tok_.pos; }

private:
    std::string_view src_;
    size_t pos_ = 0;
    Token tok_;

    [[noreturn]] void fail(size_t at, const std::string& msg) const { throw ParseError(at, msg); }

    void skipSpace() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    static bool pnLocalChar(char c) {
        return wordChar(c) || c == '-';
    }

    void lexPNameLocal(Token& t, size_t start) {
        // local part may be empty ("ex:"); a dot is part of the local name
        // only when followed by another local char, so "ex:a." lexes as the
        // name "ex:a" followed by the triple terminator.
        size_t b = pos_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (pnLocalChar(c)) {
                ++pos_;
            } else if (c == '.' && pos_ + 1 < src_.size() && pnLocalChar(src_[pos_ + 1])) {
                ++pos_;
            } else {
                break;
            }
        }
        t.extra = std::string(src_.substr(b, pos_ - b));
        t.text = std::string(src_.substr(start, pos_ - start));
    }

    void lexString(Token& t) {
        char quote = src_[pos_];
        size_t start = pos_;
        ++pos_;
        std::string out;
        while (true) {
            if (pos_ >= src_.size()) fail(start, "unterminated string literal");
            char c = src_[pos_];
            if (c == quote) {
                ++pos_;
                break;
            }
            if (c == '\\') {
                if (pos_ + 1 >= src_.size()) fail(pos_, "dangling escape in string");
                char e = src_[pos_ + 1];
                switch (e) {
                    case 't': out.push_back('\t'); break;
                    case 'n': out.push_back('\n'); break;
                    case 'r': out.push_back('\r'); break;
                    case 'b': out.push_back('\b'); break;
                    case 'f': out.push_back('\f'); break;
                    case '"': out.push_back('"'); break;
                    case '\'': out.push_back('\''); break;
                    case '\\': out.push_back('\\'); break;
                    default: fail(pos_, std::string("unsupported string escape '\\") + e + "'");
                }
                pos_ += 2;
                continue;
            }
            if (c == '\n') fail(pos_, "newline in string literal");
            out.push_back(c);
            ++pos_;
        }
        t.type = Tok::Str;
        t.content = std::move(out);
        // language tag attaches directly to the closing quote
        if (pos_ < src_.size() && src_[pos_] == '@') {
            size_t b = ++pos_;
            auto alpha = [](char d) { return (d >= 'a' && d <= 'z') || (d >= 'A' && d <= 'Z'); };
            auto alnum = [&](char d) { return alpha(d) || (d >= '0' && d <= '9'); };
            while (pos_ < src_.size() && alpha(src_[pos_])) ++pos_;
            if (pos_ == b) fail(b, "empty language tag");
            while (pos_ < src_.size() && src_[pos_] == '-') {
                size_t sub = ++pos_;
                while (pos_ < src_.size() && alnum(src_[pos_])) ++pos_;
                if (pos_ == sub) fail(sub, "malformed language tag");
            }
            t.extra = std::string(src_.substr(b, pos_ - b));
        }
        t.text = std::string(src_.substr(start, pos_ - start));
    }

    void advance() {
        skipSpace();
        tok_ = Token{};
        tok_.pos = pos_;
        if (pos_ >= src_.size()) {
            tok_.type = Tok::Eof;
            return;
        }
        char c = src_[pos_];
        size_t start = pos_;

        if (c == '<') {
            // IRIREF if a '>' closes it before whitespace; otherwise operator.
            if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
                pos_ += 2;
                tok_.type = Tok::Punct;
                tok_.text = "<=";
                return;
            }
            size_t j = pos_ + 1;
            bool iri = false;
            while (j < src_.size()) {
                char d = src_[j];
                if (d == '>') {
                    iri = true;
                    break;
                }
                if (d == ' ' || d == '\t' || d == '\n' || d == '\r' || d == '<' || d == '"') break;
                ++j;
            }
            if (iri) {
                tok_.type = Tok::IriRef;
                tok_.content = std::string(src_.substr(pos_ + 1, j - pos_ - 1));
                pos_ = j + 1;
                tok_.text = std::string(src_.substr(start, pos_ - start));
                return;
            }
            ++pos_;
            tok_.type = Tok::Punct;
            tok_.text = "<";
            return;
        }
        if (c == '?' || c == '$') {
            ++pos_;
            size_t b = pos_;
            while (pos_ < src_.size() && wordChar(src_[pos_])) ++pos_;
            if (pos_ == b) fail(start, "empty variable name");
            tok_.type = Tok::Var;
            tok_.content = std::string(src_.substr(b, pos_ - b));
            tok_.text = std::string(src_.substr(start, pos_ - start));
            return;
        }
        if (c == '"' || c == '\'') {
            lexString(tok_);
            return;
        }
        if (c == '_' && pos_ + 1 < src_.size() && src_[pos_ + 1] == ':') {
            pos_ += 2;
            size_t b = pos_;
            while (pos_ < src_.size() && pnLocalChar(src_[pos_])) ++pos_;
            if (pos_ == b) fail(start, "empty blank node label");
            tok_.type = Tok::Blank;
            tok_.content = std::string(src_.substr(b, pos_ - b));
            tok_.text = std::string(src_.substr(start, pos_ - start));
            return;
        }
        auto isDigit = [](char d) { return d >= '0' && d <= '9'; };
        if (isDigit(c) || ((c == '+' || c == '-') && pos_ + 1 < src_.size() &&
                           (isDigit(src_[pos_ + 1]) || src_[pos_ + 1] == '.')) ||
            (c == '.' && pos_ + 1 < src_.size() && isDigit(src_[pos_ + 1]))) {
            if (c == '+' || c == '-') ++pos_;
            while (pos_ < src_.size() && isDigit(src_[pos_])) ++pos_;
            if (pos_ < src_.size() && src_[pos_] == '.' && pos_ + 1 < src_.size() && isDigit(src_[pos_ + 1])) {
                ++pos_;
                while (pos_ < src_.size() && isDigit(src_[pos_])) ++pos_;
            }
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                size_t save = pos_;
                ++pos_;
                if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
                if (pos_ < src_.size() && isDigit(src_[pos_])) {
                    while (pos_ < src_.size() && isDigit(src_[pos_])) ++pos_;
                } else {
                    pos_ = save;
                }
            }
            tok_.type = Tok::Num;
            tok_.text = std::string(src_.substr(start, pos_ - start));
            return;
        }
        if (wordChar(c) && !isDigit(c)) {
            while (pos_ < src_.size() && wordChar(src_[pos_])) ++pos_;
            std::string word(src_.substr(start, pos_ - start));
            if (pos_ < src_.size() && src_[pos_] == ':') {
                ++pos_;
                tok_.type = Tok::PName;
                tok_.content = word;
                lexPNameLocal(tok_, start);
                return;
            }
            tok_.type = Tok::Word;
            tok_.text = std::move(word);
            return;
        }
        if (c == ':') {
            ++pos_;
            tok_.type = Tok::PName;
            tok_.content = "";
            lexPNameLocal(tok_, start);
            return;
        }
        // multi-char operators first
        auto two = src_.substr(pos_, 2);
        if (two == "^^" || two == "&&" || two == "||" || two == "!=" || two == ">=") {
            pos_ += 2;
            tok_.type = Tok::Punct;
            tok_.text = std::string(two);
            return;
        }
        static const std::string singles = "{}()[].;,*=><!+-/^";
        if (singles.find(c) != std::string::npos) {
            ++pos_;
            tok_.type = Tok::Punct;
            tok_.text = std::string(1, c);
            return;
        }
        fail(pos_, std::string("unexpected character '") + c + "'");
    }
};

inline std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    return out;
}

inline bool isKeyword(const Token& t, const char* kw) {
    return t.type == Tok::Word && upper(t.text) == kw;
}

inline std::string escapeLiteral(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace detail

inline std::string serializeTerm(const Term& t) {
    switch (t.kind) {
        case TermKind::Iri: return "<" + t.lexical + ">";
        case TermKind::Variable: return "?" + t.lexical;
        case TermKind::BlankNode: return "_:" + t.lexical;
        case TermKind::Literal: break;
    }
    if (t.plainToken) return t.lexical;
    std::string out = "\"" + detail::escapeLiteral(t.lexical) + "\"";
    if (!t.langTag.empty()) {
        out += "@" + t.langTag;
    } else if (!t.datatypeIri.empty()) {
        out += "^^<" + t.datatypeIri + ">";
    }
    return out;
}

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    ParsedQuery run() {
        ParsedQuery q;
        parsePrologue(q);
        parseSelect(q);
        q.tree = parseGroup();
        parseModifiers(q);
        if (lex_.peek().type != Tok::Eof) {
            const auto& t = lex_.peek();
            if (t.type == Tok::Word) {
                std::string kw = upper(t.text);
                if (kw == "GROUP" || kw == "HAVING")
                    throw ParseError(t.pos, "aggregation (" + kw + ") is not supported");
            }
            throw ParseError(t.pos, "unexpected trailing input");
        }
        return q;
    }

private:
    Lexer lex_;
    std::map<std::string, std::string> prefixes_;

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(lex_.peek().pos, msg); }

    bool eatPunct(const char* p) {
        if (lex_.peek().type == Tok::Punct && lex_.peek().text == p) {
            lex_.next();
            return true;
        }
        return false;
    }

    void expectPunct(const char* p, const char* what) {
        if (!eatPunct(p)) fail(std::string("expected '") + p + "' " + what);
    }

    void parsePrologue(ParsedQuery& q) {
        while (true) {
            const Token& t = lex_.peek();
            if (isKeyword(t, "PREFIX")) {
                lex_.next();
                Token name = lex_.next();
                if (name.type != Tok::PName || !name.extra.empty())
                    throw ParseError(name.pos, "expected prefix name before IRI");
                Token iri = lex_.next();
                if (iri.type != Tok::IriRef) throw ParseError(iri.pos, "expected IRI in PREFIX declaration");
                prefixes_[name.content] = iri.content;
                q.prefixes[name.content] = iri.content;
            } else if (isKeyword(t, "BASE")) {
                throw ParseError(t.pos, "BASE declarations are not supported");
            } else {
                return;
            }
        }
    }

    void parseSelect(ParsedQuery& q) {
        const Token& t = lex_.peek();
        if (t.type != Tok::Word) fail("expected SELECT query");
        std::string kw = upper(t.text);
        if (kw == "CONSTRUCT" || kw == "ASK" || kw == "DESCRIBE")
            throw ParseError(t.pos, kw + " queries are not supported (SELECT only)");
        if (kw != "SELECT") throw ParseError(t.pos, "expected SELECT, got '" + t.text + "'");
        lex_.next();
        if (isKeyword(lex_.peek(), "DISTINCT")) {
            lex_.next();
            q.modifiers.distinct = true;
        } else if (isKeyword(lex_.peek(), "REDUCED")) {
            throw ParseError(lex_.peek().pos, "REDUCED is not supported");
        }
        if (eatPunct("*")) {
            q.projection.star = true;
        } else {
            while (lex_.peek().type == Tok::Var) q.projection.variables.push_back(lex_.next().content);
            if (q.projection.variables.empty()) {
                if (lex_.peek().type == Tok::Punct && lex_.peek().text == "(")
                    fail("expressions/aggregates in SELECT are not supported");
                fail("expected '*' or projection variables after SELECT");
            }
        }
        if (isKeyword(lex_.peek(), "WHERE")) lex_.next();
    }

    Term parseTerm(bool predicatePosition) {
        Token t = lex_.next();
        switch (t.type) {
            case Tok::IriRef: return Term{TermKind::Iri, t.content, "", "", false};
            case Tok::PName: return Term{TermKind::Iri, expandPName(t), "", "", false};
            case Tok::Var: return Term{TermKind::Variable, t.content, "", "", false};
            case Tok::Blank: return Term{TermKind::BlankNode, t.content, "", "", false};
            case Tok::Num: return Term{TermKind::Literal, t.text, "", "", true};
            case Tok::Str: return parseLiteralRest(std::move(t));
            case Tok::Word: {
                std::string kw = upper(t.text);
                if (t.text == "a" && predicatePosition) return Term{TermKind::Iri, kRdfTypeIri, "", "", false};
                if (kw == "TRUE" || kw == "FALSE")
                    return Term{TermKind::Literal, kw == "TRUE" ? "true" : "false", "", "", true};
                throw ParseError(t.pos, "unexpected token '" + t.text + "' in triple pattern");
            }
            case Tok::Punct:
                if (t.text == "[") throw ParseError(t.pos, "blank node property lists are not supported");
                throw ParseError(t.pos, "unexpected '" + t.text + "' in triple pattern");
            default: throw ParseError(t.pos, "unexpected end of input in triple pattern");
        }
    }

    Term parseLiteralRest(Token str) {
        Term lit{TermKind::Literal, str.content, "", "", false};
        if (!str.extra.empty()) {
            lit.langTag = str.extra;
            return lit;
        }
        const Token& p = lex_.peek();
        if (p.type == Tok::Punct && p.text == "^^") {
            lex_.next();
            Token dt = lex_.next();
            if (dt.type == Tok::IriRef)
                lit.datatypeIri = dt.content;
            else if (dt.type == Tok::PName)
                lit.datatypeIri = expandPName(dt);
            else
                throw ParseError(dt.pos, "expected datatype IRI after '^^'");
        }
        return lit;
    }

    std::string expandPName(const Token& t) {
        auto it = prefixes_.find(t.content);
        if (it == prefixes_.end())
            throw ParseError(t.pos, "undeclared prefix '" + t.content + ":'");
        return it->second + t.extra;
    }

    // Captures a FILTER constraint: either a bracketted expression or a
    // function-style call. Tokens are re-serialized with single spaces and
    // expanded prefixes so whitespace and prefix variants collapse to one key;
    // string literals inside are preserved exactly.
    std::string captureFilter() {
        std::string out;
        auto append = [&](const Token& t) {
            if (!out.empty()) out.push_back(' ');
            switch (t.type) {
                case Tok::PName: out += "<" + expandPName(t) + ">"; break;
                case Tok::Var: out += "?" + t.content; break;
                case Tok::Str:
                    out += "\"" + escapeLiteral(t.content) + "\"";
                    if (!t.extra.empty()) out += "@" + t.extra;
                    break;
                default: out += t.text;
            }
        };
        const Token& head = lex_.peek();
        if (isKeyword(head, "EXISTS") || isKeyword(head, "NOT"))
            throw ParseError(head.pos, "FILTER EXISTS is not supported");
        if (!(head.type == Tok::Punct && head.text == "(")) {
            if (head.type == Tok::Word || head.type == Tok::PName || head.type == Tok::IriRef) {
                append(lex_.next());
                if (!(lex_.peek().type == Tok::Punct && lex_.peek().text == "("))
                    fail("expected '(' after FILTER function name");
            } else {
                fail("expected '(' or function call after FILTER");
            }
        }
        int depth = 0;
        while (true) {
            const Token& t = lex_.peek();
            if (t.type == Tok::Eof) fail("unterminated FILTER expression");
            if (t.type == Tok::Punct && t.text == "(") ++depth;
            if (t.type == Tok::Punct && t.text == ")") --depth;
            append(lex_.next());
            if (depth == 0) break;
        }
        return out;
    }

    // Parses one subject with its predicate-object list, expanding ';' and
    // ',' shorthands into individual triples.
    void parseTriples(PatternGroup& g) {
        Term subject = parseTerm(false);
        while (true) {
            Term predicate = parseTerm(true);
            if (predicate.kind == TermKind::Literal || predicate.kind == TermKind::BlankNode)
                fail("predicate must be an IRI or a variable");
            while (true) {
                Term object = parseTerm(false);
                g.patterns.push_back(TriplePattern{subject, predicate, object});
                if (!eatPunct(",")) break;
            }
            if (eatPunct(";")) {
                const Token& t = lex_.peek();
                // trailing ';' ends the predicate-object list
                if ((t.type == Tok::Punct && (t.text == "." || t.text == "}")) || t.type == Tok::Eof ||
                    isKeyword(t, "OPTIONAL") || isKeyword(t, "FILTER"))
                    break;
                continue;
            }
            break;
        }
    }

    PatternGroup parseGroup() {
        expectPunct("{", "to open a group pattern");
        PatternGroup g;
        while (true) {
            const Token& t = lex_.peek();
            if (t.type == Tok::Eof) fail("unterminated group pattern (missing '}')");
            if (t.type == Tok::Punct && t.text == "}") {
                lex_.next();
                return g;
            }
            if (t.type == Tok::Punct && t.text == ".") {  // stray separator
                lex_.next();
                continue;
            }
            if (t.type == Tok::Punct && t.text == "{") {
                PatternGroup first = parseGroup();
                if (isKeyword(lex_.peek(), "UNION")) {
                    PatternGroup u;
                    u.kind = GroupKind::UnionBranches;
                    u.children.push_back(std::move(first));
                    while (isKeyword(lex_.peek(), "UNION")) {
                        lex_.next();
                        u.children.push_back(parseGroup());
                    }
                    g.children.push_back(std::move(u));
                } else {
                    g.children.push_back(std::move(first));
                }
                eatPunct(".");
                continue;
            }
            if (t.type == Tok::Word) {
                std::string kw = upper(t.text);
                if (kw == "OPTIONAL") {
                    lex_.next();
                    PatternGroup opt = parseGroup();
                    opt.kind = GroupKind::Optional;
                    g.children.push_back(std::move(opt));
                    eatPunct(".");
                    continue;
                }
                if (kw == "FILTER") {
                    lex_.next();
                    g.filters.push_back(captureFilter());
                    eatPunct(".");
                    continue;
                }
                if (kw == "SERVICE" || kw == "GRAPH" || kw == "VALUES" || kw == "BIND" ||
                    kw == "MINUS" || kw == "SELECT")
                    throw ParseError(t.pos, kw + " is not supported inside a group pattern");
            }
            parseTriples(g);
            if (!eatPunct(".")) {
                const Token& after = lex_.peek();
                bool groupThing = (after.type == Tok::Punct && (after.text == "}" || after.text == "{")) ||
                                  isKeyword(after, "OPTIONAL") || isKeyword(after, "FILTER");
                if (!groupThing) fail("expected '.' between triple patterns");
            }
        }
    }

    uint64_t parseCount(const char* what) {
        Token t = lex_.next();
        if (t.type != Tok::Num || t.text.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError(t.pos, std::string("expected a non-negative integer after ") + what);
        return std::stoull(t.text);
    }

    void parseModifiers(ParsedQuery& q) {
        while (true) {
            const Token& t = lex_.peek();
            if (!isKeyword(t, "LIMIT") && !isKeyword(t, "OFFSET") && !isKeyword(t, "ORDER")) return;
            std::string kw = upper(t.text);
            lex_.next();
            if (kw == "LIMIT") {
                if (q.modifiers.limit) fail("duplicate LIMIT");
                q.modifiers.limit = parseCount("LIMIT");
            } else if (kw == "OFFSET") {
                if (q.modifiers.offset) fail("duplicate OFFSET");
                q.modifiers.offset = parseCount("OFFSET");
            } else {
                if (!isKeyword(lex_.peek(), "BY")) fail("expected BY after ORDER");
                lex_.next();
                if (!q.modifiers.orderBy.empty()) fail("duplicate ORDER BY");
                q.modifiers.orderBy = captureOrderBy();
            }
        }
    }

    // ORDER BY conditions up to LIMIT/OFFSET/end, normalized token-by-token.
    std::string captureOrderBy() {
        std::string out;
        int depth = 0;
        while (true) {
            const Token& t = lex_.peek();
            if (t.type == Tok::Eof) break;
            if (depth == 0 && (isKeyword(t, "LIMIT") || isKeyword(t, "OFFSET"))) break;
            if (t.type == Tok::Punct && t.text == "(") ++depth;
            if (t.type == Tok::Punct && t.text == ")") --depth;
            Token tok = lex_.next();
            if (!out.empty()) out.push_back(' ');
            switch (tok.type) {
                case Tok::PName: out += "<" + expandPName(tok) + ">"; break;
                case Tok::Var: out += "?" + tok.content; break;
                case Tok::Str:
                    out += "\"" + escapeLiteral(tok.content) + "\"";
                    if (!tok.extra.empty()) out += "@" + tok.extra;
                    break;
                case Tok::Word: {
                    std::string kw = upper(tok.text);
                    out += (kw == "ASC" || kw == "DESC") ? kw : tok.text;
                    break;
                }
                default: out += tok.text;
            }
        }
        if (out.empty()) fail("empty ORDER BY clause");
        return out;
    }
};

inline void serializeGroupBody(const PatternGroup& g, std::string& out);

inline void serializeChild(const PatternGroup& child, std::string& out) {
    switch (child.kind) {
        case GroupKind::Optional:
            out += "OPTIONAL { ";
            serializeGroupBody(child, out);
            out += "}";
            break;
        case GroupKind::UnionBranches: {
            bool first = true;
            for (const auto& branch : child.children) {
                if (!first) out += " UNION ";
                first = false;
                out += "{ ";
                serializeGroupBody(branch, out);
                out += "}";
            }
            break;
        }
        case GroupKind::Group:
            out += "{ ";
            serializeGroupBody(child, out);
            out += "}";
            break;
    }
}

inline void serializeGroupBody(const PatternGroup& g, std::string& out) {
    bool first = true;
    for (const auto& p : g.patterns) {
        if (!first) out += " . ";
        first = false;
        out += serializeTerm(p.subject) + " " + serializeTerm(p.predicate) + " " + serializeTerm(p.object);
    }
    for (const auto& child : g.children) {
        if (!first) out += " ";
        first = false;
        serializeChild(child, out);
    }
    for (const auto& f : g.filters) {
        if (!first) out += " ";
        first = false;
        out += "FILTER " + f;
    }
    out += first ? "" : " ";
}

}  // namespace detail

/// Parses the supported SELECT subset. Throws ParseError for anything else.
inline ParsedQuery parse(std::string_view queryText) {
    detail::Parser p(queryText);
    return p.run();
}

/// Canonical v1 serialization: uppercase keywords, single spaces, prefixes
/// expanded inline, patterns in original order, filters normalized but not
/// interpreted. Idempotent: reparsing and reserializing is a fixed point.
inline std::string serializeCanonical(const ParsedQuery& q) {
    std::string out = "SELECT ";
    if (q.modifiers.distinct) out += "DISTINCT ";
    if (q.projection.star) {
        out += "*";
    } else {
        bool first = true;
        for (const auto& v : q.projection.variables) {
            if (!first) out += " ";
            first = false;
            out += "?" + v;
        }
    }
    out += " WHERE { ";
    detail::serializeGroupBody(q.tree, out);
    out += "}";
    if (!q.modifiers.orderBy.empty()) out += " ORDER BY " + q.modifiers.orderBy;
    if (q.modifiers.limit) out += " LIMIT " + std::to_string(*q.modifiers.limit);
    if (q.modifiers.offset) out += " OFFSET " + std::to_string(*q.modifiers.offset);
    return out;
}

inline CanonicalKey canonicalize(const ParsedQuery& q) { return CanonicalKey{serializeCanonical(q)}; }

}  // namespace sparcache

template <>
struct std::hash<sparcache::CanonicalKey> {
    size_t operator()(const sparcache::CanonicalKey& k) const noexcept {
        return std::hash<std::string>{}(k.text);
    }
};
