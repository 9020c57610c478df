#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "relisim/error.hpp"
#include "relisim/expression.hpp"
#include "relisim/history.hpp"

using namespace relisim;

namespace {

double eval1(const std::string& src, std::vector<double> x = {0.0}, double t = 0.0,
             std::map<std::string, double> params = {}) {
    const auto e = Expression::parse(src, {x.size(), std::move(params), true});
    return e.eval(std::span<const double>(x), t);
}

std::string error_where(const std::string& src, Expression::Symbols sym = {}) {
    try {
        Expression::parse(src, sym);
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "no error";
}

}  // namespace

TEST_CASE("arithmetic and precedence") {
    CHECK(eval1("1 + 2 * 3") == 7.0);
    CHECK(eval1("(1 + 2) * 3") == 9.0);
    CHECK(eval1("8 / 4 / 2") == 1.0);
    CHECK(eval1("10 - 4 - 3") == 3.0);
    CHECK(eval1("-2 * -3") == 6.0);
    CHECK(eval1("- - 1") == 1.0);
    CHECK(eval1("+4") == 4.0);
    CHECK(eval1("2.5e-1 * 4") == 1.0);
    CHECK(eval1(".5") == 0.5);
}

TEST_CASE("functions, constants, time and parameters") {
    CHECK(eval1("exp(1)") == std::exp(1.0));
    CHECK(eval1("sin(pi / 2)") == std::sin(std::numbers::pi / 2));
    CHECK(eval1("tanh(0.3)") == std::tanh(0.3));
    CHECK(eval1("max(2, -5)") == 2.0);
    CHECK(eval1("max(-x, x)", {-3.0}) == 3.0);
    CHECK(eval1("t * t", {0.0}, 1.5) == 2.25);
    CHECK(eval1("k * x", {2.0}, 0.0, {{"k", 1.5}}) == 3.0);
}

TEST_CASE("state components") {
    const std::vector<double> x{1.0, 2.0, 4.0};
    CHECK(eval1("x", x) == 1.0);
    CHECK(eval1("x0 + x1 * x2", x) == 9.0);
    CHECK(eval1("x2(t)", x) == 4.0);
    CHECK(error_where("x3", {3}) == "column 3");
}

TEST_CASE("delayed reads see the history buffer") {
    // x(t) = 2 t on a grid of 0.1; the tabulated past steps through -2 and -1.
    const auto init = InitialSegment::tabulated({0.0}, {{-1.0, {-2.0}}, {-0.5, {-1.0}}});
    HistoryBuffer buf(init, 0.1, 2.0);
    for (int k = 1; k <= 10; ++k) buf.append(std::vector<double>{0.2 * k});
    const auto e = Expression::parse("x(t - 0.5) + 0 * x", {1, {}, true});
    CHECK(e.max_delay() == 0.5);
    CHECK(e.eval(buf, 1.0) == doctest::Approx(1.0));
    const auto past = Expression::parse("x(t - 2 * 0.75)", {1, {}, true});
    CHECK(past.max_delay() == 1.5);
    CHECK(past.eval(buf, 1.0) == doctest::Approx(-1.0));
    const auto folded = Expression::parse("x(t + -0.2)", {1, {}, true});
    CHECK(folded.max_delay() == doctest::Approx(0.2));
    CHECK(folded.eval(buf, 1.0) == doctest::Approx(1.6));

    CHECK_THROWS_AS(e.eval(std::span<const double>(std::vector<double>{0.0}), 0.0), DomainError);
}

TEST_CASE("parse errors name the column") {
    CHECK(error_where("1 +") == "column 4");
    CHECK(error_where("2 * (x") == "column 7");
    CHECK(error_where("y + 1") == "column 1");
    CHECK(error_where("1 $ 2") == "column 3");
    CHECK(error_where("x(t - x)") == "column 8");
    CHECK(error_where("x(t + 1)") == "column 9");
    CHECK(error_where("x(s)") != "no error");
    CHECK(error_where("max(1)") != "no error");
    CHECK(error_where("x(t - 1)", {1, {}, false}) != "no error");
    CHECK(error_where("x(t)", {1, {}, false}) == "no error");
}
