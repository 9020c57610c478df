#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relisim/history.hpp"

namespace relisim {

/**
 * Small arithmetic language for declaring drift, diffusion, control and limit
 * states in configuration files.
 *
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := ('-' | '+') unary | primary
 *   primary := number | '(' expr ')' | 't' | 'pi' | param
 *            | state ['(' 't' [('-' | '+') const_expr] ')']
 *            | ('exp' | 'sin' | 'tanh') '(' expr ')' | 'max' '(' expr ',' expr ')'
 *   state   := 'x' | 'x' digits
 *
 * `x` is component 0; `x3(t - 0.5)` reads component 3 half a time unit back.
 * Delays must be constant and non-negative; a '+' offset must fold to <= 0.
 */
class Expression {
public:
    struct Symbols {
        std::size_t dimension = 1;
        std::map<std::string, double> params;
        bool allow_delay = true;
    };

    /// Throws ConfigError naming the column of the offending token.
    static Expression parse(std::string_view source, const Symbols& symbols);

    double eval(const HistoryBuffer& history, double t) const;
    /// Instantaneous evaluation; only valid for expressions without delayed reads.
    double eval(std::span<const double> state, double t) const;

    double max_delay() const noexcept { return max_delay_; }
    const std::string& source() const noexcept { return source_; }

private:
    enum class Op { constant, time, state, add, sub, mul, div, neg, exp, sin, tanh, max };
    struct Node {
        Op op;
        int lhs = -1;
        int rhs = -1;
        double value = 0.0;     // constant, or delay for state reads
        std::size_t index = 0;  // state component
    };

    template <class Reader>
    double eval_node(int i, const Reader& read, double t) const;

    friend class ExpressionParser;

    std::string source_;
    std::vector<Node> nodes_;
    int root_ = -1;
    double max_delay_ = 0.0;
};

}  // namespace relisim
