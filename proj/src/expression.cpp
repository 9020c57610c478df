#include "relisim/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "relisim/error.hpp"

namespace relisim {

class ExpressionParser {
public:
    ExpressionParser(std::string_view src, const Expression::Symbols& symbols, Expression& out)
        : src_(src), symbols_(symbols), out_(out) {}

    void run() {
        out_.root_ = parse_expr();
        skip_space();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    }

private:
    using Op = Expression::Op;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("column " + std::to_string(pos_ + 1),
                          "in expression '" + std::string(src_) + "': " + what);
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    int add(Expression::Node node) {
        out_.nodes_.push_back(node);
        return static_cast<int>(out_.nodes_.size()) - 1;
    }

    int binary(Op op, int lhs, int rhs) { return add({op, lhs, rhs}); }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = binary(Op::add, lhs, parse_term());
            else if (accept('-')) lhs = binary(Op::sub, lhs, parse_term());
            else return lhs;
        }
    }

    int parse_term() {
        int lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = binary(Op::mul, lhs, parse_unary());
            else if (accept('/')) lhs = binary(Op::div, lhs, parse_unary());
            else return lhs;
        }
    }

    int parse_unary() {
        if (accept('-')) return add({Op::neg, parse_unary()});
        if (accept('+')) return parse_unary();
        return parse_primary();
    }

    std::string identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        return std::string(src_.substr(start, pos_ - start));
    }

    int parse_number() {
        const std::string rest(src_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - rest.c_str());
        return add({Op::constant, -1, -1, v});
    }

    // Folds a subtree built only from constants; fails if it reads time or state.
    double fold(int i) const {
        const auto& n = out_.nodes_[static_cast<std::size_t>(i)];
        switch (n.op) {
            case Op::constant: return n.value;
            case Op::add: return fold(n.lhs) + fold(n.rhs);
            case Op::sub: return fold(n.lhs) - fold(n.rhs);
            case Op::mul: return fold(n.lhs) * fold(n.rhs);
            case Op::div: return fold(n.lhs) / fold(n.rhs);
            case Op::neg: return -fold(n.lhs);
            case Op::exp: return std::exp(fold(n.lhs));
            case Op::sin: return std::sin(fold(n.lhs));
            case Op::tanh: return std::tanh(fold(n.lhs));
            case Op::max: return std::max(fold(n.lhs), fold(n.rhs));
            default: fail("delay must be a constant expression");
        }
    }

    int parse_state(std::size_t index) {
        if (index >= symbols_.dimension)
            fail("state component " + std::to_string(index) + " out of range for dimension " +
                 std::to_string(symbols_.dimension));
        double delay = 0.0;
        if (accept('(')) {
            skip_space();
            if (identifier() != "t") fail("state reads take the form x(t) or x(t - d)");
            if (accept('-')) {
                delay = fold(parse_term());
            } else if (accept('+')) {
                delay = -fold(parse_term());
            }
            expect(')');
            if (!std::isfinite(delay) || delay < 0.0) fail("delay must be finite and >= 0");
            if (delay > 0.0 && !symbols_.allow_delay) fail("delayed state reads are not allowed here");
        }
        out_.max_delay_ = std::max(out_.max_delay_, delay);
        Expression::Node node{Op::state};
        node.value = delay;
        node.index = index;
        return add(node);
    }

    int parse_primary() {
        skip_space();
        if (pos_ >= src_.size()) fail("unexpected end of expression");
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (accept('(')) {
            const int inner = parse_expr();
            expect(')');
            return inner;
        }
        if (!std::isalpha(static_cast<unsigned char>(c)) && c != '_') fail("unexpected '" + std::string(1, c) + "'");
        const std::size_t start = pos_;
        const std::string name = identifier();
        if (name == "t") return add({Op::time});
        if (name == "pi") return add({Op::constant, -1, -1, std::numbers::pi});
        if (auto it = symbols_.params.find(name); it != symbols_.params.end())
            return add({Op::constant, -1, -1, it->second});
        if (name == "exp" || name == "sin" || name == "tanh") {
            expect('(');
            const int arg = parse_expr();
            expect(')');
            const Op op = name == "exp" ? Op::exp : name == "sin" ? Op::sin : Op::tanh;
            return add({op, arg});
        }
        if (name == "max") {
            expect('(');
            const int a = parse_expr();
            expect(',');
            const int b = parse_expr();
            expect(')');
            return binary(Op::max, a, b);
        }
        if (name == "x") return parse_state(0);
        if (name.size() > 1 && name[0] == 'x' &&
            std::all_of(name.begin() + 1, name.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); }))
            return parse_state(static_cast<std::size_t>(std::stoul(name.substr(1))));
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }

    std::string_view src_;
    const Expression::Symbols& symbols_;
    Expression& out_;
    std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view source, const Symbols& symbols) {
    Expression e;
    e.source_ = std::string(source);
    ExpressionParser(e.source_, symbols, e).run();
    e.nodes_.shrink_to_fit();
    return e;
}

template <class Reader>
double Expression::eval_node(int i, const Reader& read, double t) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
        case Op::constant: return n.value;
        case Op::time: return t;
        case Op::state: return read(n.index, n.value);
        case Op::add: return eval_node(n.lhs, read, t) + eval_node(n.rhs, read, t);
        case Op::sub: return eval_node(n.lhs, read, t) - eval_node(n.rhs, read, t);
        case Op::mul: return eval_node(n.lhs, read, t) * eval_node(n.rhs, read, t);
        case Op::div: return eval_node(n.lhs, read, t) / eval_node(n.rhs, read, t);
        case Op::neg: return -eval_node(n.lhs, read, t);
        case Op::exp: return std::exp(eval_node(n.lhs, read, t));
        case Op::sin: return std::sin(eval_node(n.lhs, read, t));
        case Op::tanh: return std::tanh(eval_node(n.lhs, read, t));
        case Op::max: return std::max(eval_node(n.lhs, read, t), eval_node(n.rhs, read, t));
    }
    return 0.0;
}

double Expression::eval(const HistoryBuffer& history, double t) const {
    auto read = [&](std::size_t index, double delay) { return history.component(-delay, index); };
    return eval_node(root_, read, t);
}

double Expression::eval(std::span<const double> state, double t) const {
    if (max_delay_ > 0.0) throw DomainError("expression '" + source_ + "' reads delayed state");
    auto read = [&](std::size_t index, double) { return state[index]; };
    return eval_node(root_, read, t);
}

}  // namespace relisim
