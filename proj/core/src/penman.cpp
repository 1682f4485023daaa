#include "diacdm/penman.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "diacdm/error.hpp"

namespace diacdm {

namespace {

enum class Tok { LParen, RParen, Slash, Role, String, Symbol };

struct Token {
    Tok kind;
    std::string text;
    std::size_t offset;
};

bool is_delim(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"';
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    bool line_start = true;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            line_start = true;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (line_start && c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        line_start = false;
        const std::size_t start = i;
        if (c == '(') {
            out.push_back({Tok::LParen, "(", start});
            ++i;
        } else if (c == ')') {
            out.push_back({Tok::RParen, ")", start});
            ++i;
        } else if (c == '/') {
            out.push_back({Tok::Slash, "/", start});
            ++i;
        } else if (c == '"') {
            ++i;
            while (i < text.size() && text[i] != '"') {
                if (text[i] == '\\') ++i;
                ++i;
            }
            if (i >= text.size()) {
                throw Error(Errc::MalformedPenman,
                            "unterminated string at offset " + std::to_string(start));
            }
            ++i;
            out.push_back({Tok::String, std::string(text.substr(start, i - start)), start});
        } else if (c == ':') {
            ++i;
            while (i < text.size() && !is_delim(text[i])) ++i;
            if (i == start + 1) {
                throw Error(Errc::MalformedPenman, "empty role at offset " + std::to_string(start));
            }
            out.push_back({Tok::Role, std::string(text.substr(start + 1, i - start - 1)), start});
        } else {
            while (i < text.size() && !is_delim(text[i]) && text[i] != '/') ++i;
            out.push_back({Tok::Symbol, std::string(text.substr(start, i - start)), start});
        }
    }
    return out;
}

bool looks_like_variable(std::string_view s) {
    if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin() + 1, s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// Relations that end in "-of" without being inverses.
bool is_inverse_role(std::string_view role) {
    static const std::unordered_set<std::string_view> kNotInverse = {
        "consist-of", "prep-out-of", "prep-on-behalf-of"};
    return role.size() > 3 && role.ends_with("-of") && !kNotInverse.contains(role);
}

class Parser {
   public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

   private:
    struct Pending {
        std::size_t source;
        std::string relation;
        std::string target_var;
        bool inverse;
    };

    // Pre-pass: every "( var /" defines var. Needed to resolve references
    // that occur before their definition.
    void collect_definitions() {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i + 2 < toks_.size(); ++i) {
            if (toks_[i].kind == Tok::LParen && toks_[i + 1].kind == Tok::Symbol &&
                toks_[i + 2].kind == Tok::Slash) {
                if (!seen.insert(toks_[i + 1].text).second) {
                    throw Error(Errc::DuplicateVariable, "variable '" + toks_[i + 1].text +
                                                             "' defined twice (offset " +
                                                             std::to_string(toks_[i + 1].offset) + ")");
                }
            }
        }
        defined_names_ = std::move(seen);
    }

    const Token* peek() const { return pos_ < toks_.size() ? &toks_[pos_] : nullptr; }

    const Token& expect(Tok kind, const char* what) {
        const Token* t = peek();
        if (!t) {
            if (kind == Tok::RParen) throw Error(Errc::UnbalancedParens, "missing ')' at end of input");
            throw Error(Errc::MalformedPenman, std::string("expected ") + what + " at end of input");
        }
        if (t->kind != kind) {
            throw Error(Errc::MalformedPenman, std::string("expected ") + what + " but found '" +
                                                   t->text + "' at offset " + std::to_string(t->offset));
        }
        ++pos_;
        return *t;
    }

    std::size_t parse_node() {
        expect(Tok::LParen, "'('");
        const Token& var = expect(Tok::Symbol, "variable");
        expect(Tok::Slash, "'/'");
        const Token* concept_tok = peek();
        if (!concept_tok || (concept_tok->kind != Tok::Symbol && concept_tok->kind != Tok::String)) {
            throw Error(Errc::MalformedPenman, "missing concept after '" + var.text + " /'");
        }
        ++pos_;
        const std::size_t index = graph_.nodes.size();
        graph_.nodes.push_back({var.text, concept_tok->text, AmrNodeKind::Instance});
        defined_[var.text] = index;

        while (const Token* t = peek()) {
            if (t->kind == Tok::RParen) break;
            if (t->kind != Tok::Role) {
                throw Error(Errc::MalformedPenman,
                            "expected role or ')' but found '" + t->text + "' at offset " +
                                std::to_string(t->offset));
            }
            ++pos_;
            parse_role_value(index, t->text);
        }
        expect(Tok::RParen, "')'");
        return index;
    }

    void add_edge(std::size_t from, const std::string& role, std::size_t to) {
        order_.emplace_back(order_.size(), graph_.edges.size());
        if (is_inverse_role(role)) {
            graph_.edges.push_back({to, role.substr(0, role.size() - 3), from});
        } else {
            graph_.edges.push_back({from, role, to});
        }
    }

    void parse_role_value(std::size_t owner, const std::string& role) {
        const Token* t = peek();
        if (!t || t->kind == Tok::RParen || t->kind == Tok::Role || t->kind == Tok::Slash) {
            throw Error(Errc::MalformedPenman, "role ':" + role + "' has no value");
        }
        if (t->kind == Tok::LParen) {
            const std::size_t child = parse_node();
            add_edge(owner, role, child);
            return;
        }
        ++pos_;
        if (t->kind == Tok::Symbol && defined_names_.contains(t->text)) {
            auto it = defined_.find(t->text);
            if (it != defined_.end()) {
                add_edge(owner, role, it->second);
            } else {
                // Forward reference; resolved once the whole graph is read.
                const bool inverse = is_inverse_role(role);
                order_.emplace_back(order_.size(), SIZE_MAX);
                pending_.push_back({owner, inverse ? role.substr(0, role.size() - 3) : role,
                                    t->text, inverse});
            }
            return;
        }
        if (t->kind == Tok::Symbol && looks_like_variable(t->text)) {
            throw Error(Errc::DanglingReference, "variable '" + t->text + "' is never defined (offset " +
                                                     std::to_string(t->offset) + ")");
        }
        const std::size_t index = graph_.nodes.size();
        graph_.nodes.push_back({"", t->text, AmrNodeKind::Constant});
        add_edge(owner, role, index);
    }

   public:
    AmrGraph run() {
        collect_definitions();
        parse_node();
        if (pos_ < toks_.size()) {
            const Token& t = toks_[pos_];
            if (t.kind == Tok::RParen) {
                throw Error(Errc::UnbalancedParens, "extra ')' at offset " + std::to_string(t.offset));
            }
            throw Error(Errc::MalformedPenman,
                        "trailing content '" + t.text + "' at offset " + std::to_string(t.offset));
        }
        std::vector<AmrEdge> edges;
        edges.reserve(order_.size());
        std::size_t next_pending = 0;
        for (const auto& [slot, edge_index] : order_) {
            (void)slot;
            if (edge_index != SIZE_MAX) {
                edges.push_back(graph_.edges[edge_index]);
                continue;
            }
            const Pending& p = pending_[next_pending++];
            const std::size_t target = defined_.at(p.target_var);
            if (p.inverse) {
                edges.push_back({target, p.relation, p.source});
            } else {
                edges.push_back({p.source, p.relation, target});
            }
        }
        graph_.edges = std::move(edges);
        return std::move(graph_);
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    AmrGraph graph_;
    std::unordered_set<std::string> defined_names_;
    std::unordered_map<std::string, std::size_t> defined_;
    std::vector<Pending> pending_;
    std::vector<std::pair<std::size_t, std::size_t>> order_;  // (slot, edge index or SIZE_MAX)
};

void check_balance(const std::vector<Token>& toks) {
    long depth = 0;
    for (const Token& t : toks) {
        if (t.kind == Tok::LParen) ++depth;
        if (t.kind == Tok::RParen && --depth < 0) {
            throw Error(Errc::UnbalancedParens, "unmatched ')' at offset " + std::to_string(t.offset));
        }
    }
    if (depth != 0) {
        throw Error(Errc::UnbalancedParens, std::to_string(depth) + " unclosed '('");
    }
}

}  // namespace

AmrGraph parse_penman(std::string_view text) {
    auto tokens = tokenize(text);
    if (tokens.empty()) throw Error(Errc::EmptyInput, "no PENMAN content");
    check_balance(tokens);
    Parser parser(std::move(tokens));
    return parser.run();
}

namespace {

void write_node(const AmrGraph& g, std::size_t index, std::vector<bool>& expanded,
                std::vector<bool>& edge_done, std::string& out) {
    const AmrNode& node = g.nodes[index];
    expanded[index] = true;
    out += "(" + node.variable + " / " + node.label;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        if (edge_done[e]) continue;
        const AmrEdge& edge = g.edges[e];
        std::size_t other;
        std::string role;
        if (edge.source == index) {
            other = edge.target;
            role = edge.relation;
        } else if (edge.target == index) {
            // Only walk an edge backwards to reach an unexpanded instance.
            if (expanded[edge.source] || g.nodes[edge.source].kind == AmrNodeKind::Constant) continue;
            other = edge.source;
            role = edge.relation + "-of";
        } else {
            continue;
        }
        edge_done[e] = true;
        out += " :" + role + " ";
        const AmrNode& target = g.nodes[other];
        if (target.kind == AmrNodeKind::Constant) {
            out += target.label;
        } else if (expanded[other]) {
            out += target.variable;
        } else {
            write_node(g, other, expanded, edge_done, out);
        }
    }
    out += ")";
}

}  // namespace

std::string to_penman(const AmrGraph& graph) {
    if (graph.nodes.empty()) return {};
    std::vector<bool> expanded(graph.nodes.size(), false);
    std::vector<bool> edge_done(graph.edges.size(), false);
    std::string out;
    write_node(graph, 0, expanded, edge_done, out);
    return out;
}

NormalizedAdjacency::NormalizedAdjacency(const AmrGraph& graph)
    : n_(graph.node_count()), values_(n_ * n_, 0.0), degrees_(n_, 0.0) {
    for (std::size_t i = 0; i < n_; ++i) values_[i * n_ + i] = 1.0;
    for (const AmrEdge& e : graph.edges) {
        if (e.source == e.target) continue;
        values_[e.source * n_ + e.target] = 1.0;
        values_[e.target * n_ + e.source] = 1.0;
    }
    for (std::size_t i = 0; i < n_; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n_; ++j) d += values_[i * n_ + j];
        degrees_[i] = d;
    }
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            if (values_[i * n_ + j] != 0.0)
                values_[i * n_ + j] = 1.0 / (std::sqrt(degrees_[i]) * std::sqrt(degrees_[j]));
}

Tensor NormalizedAdjacency::as_tensor() const { return Tensor::from_values(n_, n_, values_); }

}  // namespace diacdm
