#ifndef HAMCURV_EXPRDSL_HPP
#define HAMCURV_EXPRDSL_HPP

// Small arithmetic expression language for user-defined scalar fields.
// Grammar (EBNF, also in docs/expressions.md):
//
//   expr    = term   { ("+" | "-") term } ;
//   term    = factor { ("*" | "/") factor } ;
//   factor  = "-" factor | power ;
//   power   = atom [ "^" factor ] ;        (* exponent must be constant *)
//   atom    = number | ident | ident "(" expr ")" | "(" expr ")" ;
//
// "^" binds tighter than unary minus; exponents are folded to constants at
// parse time and rejected otherwise. No implicit multiplication.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hamcurv/jet.hpp"

namespace hamcurv {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : std::runtime_error("offset " + std::to_string(offset) + ": " + what),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

enum class UnaryOp { Neg, Sin, Cos, Tan, Exp, Log, Sqrt, Sinh, Cosh, Tanh, Abs };
enum class BinaryOp { Add, Sub, Mul, Div };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    struct Const { double value; };
    struct Var { int index; std::string name; };
    struct Unary { UnaryOp op; ExprPtr arg; };
    struct Binary { BinaryOp op; ExprPtr lhs, rhs; };
    struct PowConst { ExprPtr base; double exponent; };

    std::variant<Const, Var, Unary, Binary, PowConst> node;
};

namespace detail {

inline const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "-";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Tan: return "tan";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Log: return "log";
        case UnaryOp::Sqrt: return "sqrt";
        case UnaryOp::Sinh: return "sinh";
        case UnaryOp::Cosh: return "cosh";
        case UnaryOp::Tanh: return "tanh";
        case UnaryOp::Abs: return "abs";
    }
    return "?";
}

inline bool lookup_function(std::string_view name, UnaryOp& op) {
    if (name == "sin") op = UnaryOp::Sin;
    else if (name == "cos") op = UnaryOp::Cos;
    else if (name == "tan") op = UnaryOp::Tan;
    else if (name == "exp") op = UnaryOp::Exp;
    else if (name == "log") op = UnaryOp::Log;
    else if (name == "sqrt") op = UnaryOp::Sqrt;
    else if (name == "sinh") op = UnaryOp::Sinh;
    else if (name == "cosh") op = UnaryOp::Cosh;
    else if (name == "tanh") op = UnaryOp::Tanh;
    else if (name == "abs") op = UnaryOp::Abs;
    else return false;
    return true;
}

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& vars)
        : src_(src), vars_(vars) {}

    ExprPtr parse() {
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError(pos_, "unexpected trailing input");
        return e;
    }

private:
    std::string_view src_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < src_.size() && src_[pos_] == c;
    }
    bool accept(char c) {
        if (peek(c)) { ++pos_; return true; }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c)) throw ParseError(pos_, std::string("expected ") + what);
    }

    ExprPtr parse_expr() {
        ExprPtr lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = make_binary(BinaryOp::Add, lhs, parse_term());
            else if (accept('-')) lhs = make_binary(BinaryOp::Sub, lhs, parse_term());
            else return lhs;
        }
    }
    ExprPtr parse_term() {
        ExprPtr lhs = parse_factor();
        for (;;) {
            if (accept('*')) lhs = make_binary(BinaryOp::Mul, lhs, parse_factor());
            else if (accept('/')) lhs = make_binary(BinaryOp::Div, lhs, parse_factor());
            else return lhs;
        }
    }
    ExprPtr parse_factor() {
        if (accept('-')) {
            auto n = std::make_shared<ExprNode>();
            n->node = ExprNode::Unary{UnaryOp::Neg, parse_factor()};
            return n;
        }
        return parse_power();
    }
    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (accept('^')) {
            std::size_t exp_pos = pos_;
            ExprPtr exp = parse_factor();
            double c;
            if (!fold_constant(exp, c))
                throw ParseError(exp_pos, "exponent of '^' must be a constant");
            auto n = std::make_shared<ExprNode>();
            n->node = ExprNode::PowConst{base, c};
            return n;
        }
        return base;
    }
    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError(pos_, "expected expression");
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_expr();
            expect(')', "')'");
            return e;
        }
        throw ParseError(pos_, std::string("unexpected character '") + c + "'");
    }
    ExprPtr parse_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        double value;
        try {
            value = std::stod(std::string(src_.substr(start, pos_ - start)));
        } catch (const std::exception&) {
            throw ParseError(start, "malformed number");
        }
        auto n = std::make_shared<ExprNode>();
        n->node = ExprNode::Const{value};
        return n;
    }
    ExprPtr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        UnaryOp op;
        if (peek('(') && lookup_function(name, op)) {
            ++pos_;
            ExprPtr arg = parse_expr();
            expect(')', "')'");
            auto n = std::make_shared<ExprNode>();
            n->node = ExprNode::Unary{op, arg};
            return n;
        }
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == name) {
                auto n = std::make_shared<ExprNode>();
                n->node = ExprNode::Var{static_cast<int>(i), name};
                return n;
            }
        }
        std::ostringstream msg;
        msg << "unknown identifier '" << name << "'; declared variables:";
        for (const auto& v : vars_) msg << ' ' << v;
        throw ParseError(start, msg.str());
    }

    static ExprPtr make_binary(BinaryOp op, ExprPtr l, ExprPtr r) {
        auto n = std::make_shared<ExprNode>();
        n->node = ExprNode::Binary{op, std::move(l), std::move(r)};
        return n;
    }

    static bool fold_constant(const ExprPtr& e, double& out) {
        if (const auto* c = std::get_if<ExprNode::Const>(&e->node)) {
            out = c->value;
            return true;
        }
        if (const auto* u = std::get_if<ExprNode::Unary>(&e->node)) {
            double a;
            if (u->op == UnaryOp::Neg && fold_constant(u->arg, a)) { out = -a; return true; }
        }
        return false;
    }
};

inline std::size_t count_nodes(const ExprPtr& e) {
    return std::visit(
        [](const auto& n) -> std::size_t {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ExprNode::Unary>) return 1 + count_nodes(n.arg);
            else if constexpr (std::is_same_v<T, ExprNode::Binary>)
                return 1 + count_nodes(n.lhs) + count_nodes(n.rhs);
            else if constexpr (std::is_same_v<T, ExprNode::PowConst>)
                return 1 + count_nodes(n.base);  // folded exponent lives in the node
            else return 1;
        },
        e->node);
}

inline Jet eval_node(const ExprNode& e, const Vec& point) {
    const int m = static_cast<int>(point.size());
    return std::visit(
        [&](const auto& n) -> Jet {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ExprNode::Const>) {
                return Jet::constant(m, n.value);
            } else if constexpr (std::is_same_v<T, ExprNode::Var>) {
                return Jet::variable(m, n.index, point[n.index]);
            } else if constexpr (std::is_same_v<T, ExprNode::Unary>) {
                Jet a = eval_node(*n.arg, point);
                switch (n.op) {
                    case UnaryOp::Neg: return -a;
                    case UnaryOp::Sin: return sin(a);
                    case UnaryOp::Cos: return cos(a);
                    case UnaryOp::Tan: return tan(a);
                    case UnaryOp::Exp: return exp(a);
                    case UnaryOp::Log: return log(a);
                    case UnaryOp::Sqrt: return sqrt(a);
                    case UnaryOp::Sinh: return sinh(a);
                    case UnaryOp::Cosh: return cosh(a);
                    case UnaryOp::Tanh: return tanh(a);
                    case UnaryOp::Abs: return abs(a);
                }
                throw std::logic_error("unhandled unary op");
            } else if constexpr (std::is_same_v<T, ExprNode::Binary>) {
                Jet a = eval_node(*n.lhs, point);
                Jet b = eval_node(*n.rhs, point);
                switch (n.op) {
                    case BinaryOp::Add: return a + b;
                    case BinaryOp::Sub: return a - b;
                    case BinaryOp::Mul: return a * b;
                    case BinaryOp::Div: return a / b;
                }
                throw std::logic_error("unhandled binary op");
            } else {
                return pow(eval_node(*n.base, point), n.exponent);
            }
        },
        e.node);
}

inline void print_node(const ExprNode& e, std::ostream& os) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ExprNode::Const>) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", n.value);
                if (n.value < 0) os << '(' << buf << ')';
                else os << buf;
            } else if constexpr (std::is_same_v<T, ExprNode::Var>) {
                os << n.name;
            } else if constexpr (std::is_same_v<T, ExprNode::Unary>) {
                if (n.op == UnaryOp::Neg) {
                    os << "(-";
                    print_node(*n.arg, os);
                    os << ')';
                } else {
                    os << unary_name(n.op) << '(';
                    print_node(*n.arg, os);
                    os << ')';
                }
            } else if constexpr (std::is_same_v<T, ExprNode::Binary>) {
                os << '(';
                print_node(*n.lhs, os);
                switch (n.op) {
                    case BinaryOp::Add: os << " + "; break;
                    case BinaryOp::Sub: os << " - "; break;
                    case BinaryOp::Mul: os << " * "; break;
                    case BinaryOp::Div: os << " / "; break;
                }
                print_node(*n.rhs, os);
                os << ')';
            } else {
                os << '(';
                print_node(*n.base, os);
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", n.exponent);
                os << '^';
                if (n.exponent < 0) os << '(' << buf << ')';
                else os << buf;
                os << ')';
            }
        },
        e.node);
}

}  // namespace detail

/// A parsed, immutable expression over a declared variable list.
/// Evaluation is reentrant; instances are safe to share across threads.
class Expr {
public:
    static Expr parse(std::string_view source, std::vector<std::string> variables) {
        if (source.empty()) throw ParseError(0, "empty expression");
        if (variables.empty()) throw std::invalid_argument("variable list must be nonempty");
        for (std::size_t i = 0; i < variables.size(); ++i)
            for (std::size_t j = i + 1; j < variables.size(); ++j)
                if (variables[i] == variables[j])
                    throw std::invalid_argument("duplicate variable '" + variables[i] + "'");
        detail::Parser p(source, variables);
        ExprPtr root = p.parse();
        return Expr(std::move(root), std::move(variables));
    }

    /// Value, gradient and Hessian, exact to machine precision for the
    /// represented function.
    Jet eval_jet(const Vec& point) const {
        if (point.size() != static_cast<Eigen::Index>(vars_.size()))
            throw std::invalid_argument("point dimension does not match variable list");
        if (!point.allFinite())
            throw std::invalid_argument("evaluation point must be finite");
        return detail::eval_node(*root_, point);
    }

    double eval(const Vec& point) const { return eval_jet(point).v; }

    std::size_t node_count() const { return detail::count_nodes(root_); }
    const std::vector<std::string>& variables() const { return vars_; }

    std::string str() const {
        std::ostringstream os;
        detail::print_node(*root_, os);
        return os.str();
    }

private:
    Expr(ExprPtr root, std::vector<std::string> vars)
        : root_(std::move(root)), vars_(std::move(vars)) {}

    ExprPtr root_;
    std::vector<std::string> vars_;
};

}  // namespace hamcurv

#endif
