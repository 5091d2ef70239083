#include "spreadkit/fieldlang.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "spreadkit/errors.hpp"

namespace spreadkit::fieldlang {

namespace {

NodePtr make_number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Number;
    n->value = v;
    return n;
}

NodePtr make_leaf(NodeKind k) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    return n;
}

NodePtr make_unary(NodeKind k, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = {std::move(a)};
    return n;
}

NodePtr make_binary(NodeKind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = {std::move(a), std::move(b)};
    return n;
}

NodePtr make_call(Func f, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Call;
    n->func = f;
    n->args = std::move(args);
    return n;
}

struct FuncInfo {
    std::string_view name;
    Func func;
    std::size_t arity;
};

constexpr std::array<FuncInfo, 7> kFuncs{{
    {"sin", Func::Sin, 1},
    {"cos", Func::Cos, 1},
    {"exp", Func::Exp, 1},
    {"tanh", Func::Tanh, 1},
    {"abs", Func::Abs, 1},
    {"min", Func::Min, 2},
    {"max", Func::Max, 2},
}};

std::string_view func_name(Func f) {
    for (const auto& fi : kFuncs)
        if (fi.func == f) return fi.name;
    return "?";
}

class Parser {
public:
    Parser(std::string_view src, std::size_t n_vars, bool allow_u, const ParamTable& params)
        : src_(src), n_vars_(n_vars), allow_u_(allow_u), params_(params) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ == src_.size()) throw SyntaxError("empty expression", pos_);
        auto e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) throw SyntaxError(std::string("unexpected '") + src_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= src_.size()) throw SyntaxError(std::string("expected '") + c + "' before end of input", pos_);
            throw SyntaxError(std::string("expected '") + c + "'", pos_);
        }
    }

    NodePtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = make_binary(NodeKind::Add, lhs, parse_term());
            else if (accept('-')) lhs = make_binary(NodeKind::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    NodePtr parse_term() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = make_binary(NodeKind::Mul, lhs, parse_unary());
            else if (accept('/')) lhs = make_binary(NodeKind::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) return make_unary(NodeKind::Neg, parse_unary());
        return parse_power();
    }

    NodePtr parse_power() {
        auto base = parse_primary();
        if (accept('^')) return make_binary(NodeKind::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw SyntaxError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw SyntaxError(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, ++n;
            return n;
        };
        std::size_t nd = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            nd += digits();
        }
        if (nd == 0) throw SyntaxError("malformed number", start);
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            const std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) {
                // "2e" followed by something else is a syntax error, not an identifier
                pos_ = save;
                throw SyntaxError("malformed exponent", save);
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc() || ptr != src_.data() + pos_) throw SyntaxError("malformed number", start);
        return make_number(v);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view id = src_.substr(start, pos_ - start);

        skip_ws();
        const bool call = pos_ < src_.size() && src_[pos_] == '(';
        if (call) {
            auto it = std::find_if(kFuncs.begin(), kFuncs.end(), [&](const FuncInfo& f) { return f.name == id; });
            if (it == kFuncs.end()) throw UnknownIdentifier("unknown function '" + std::string(id) + "'");
            ++pos_;
            std::vector<NodePtr> args;
            if (!accept(')')) {
                args.push_back(parse_expr());
                while (accept(',')) args.push_back(parse_expr());
                expect(')');
            }
            if (args.size() != it->arity)
                throw ArityError(std::string(id) + " expects " + std::to_string(it->arity) + " argument(s), got " +
                                 std::to_string(args.size()));
            return make_call(it->func, std::move(args));
        }

        if (id == "pi") return make_leaf(NodeKind::Pi);
        if (id == "u") {
            if (!allow_u_) throw UForbidden("'u' is not allowed in this field");
            return make_leaf(NodeKind::U);
        }
        if (id.size() >= 2 && id[0] == 'x' &&
            std::all_of(id.begin() + 1, id.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            std::size_t k = 0;
            std::from_chars(id.data() + 1, id.data() + id.size(), k);
            if (k == 0 || k > n_vars_)
                throw VariableOutOfRange("variable " + std::string(id) + " exceeds dimension " + std::to_string(n_vars_));
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Var;
            n->var = k - 1;
            return n;
        }
        if (auto it = params_.find(id); it != params_.end()) {
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Param;
            n->name = std::string(id);
            n->value = it->second;
            return n;
        }
        for (const auto& f : kFuncs)
            if (f.name == id) throw SyntaxError("function '" + std::string(id) + "' requires arguments", start);
        throw UnknownIdentifier("unknown identifier '" + std::string(id) + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t n_vars_;
    bool allow_u_;
    const ParamTable& params_;
};

// Printing precedence: atoms 5, pow 4, neg 3, mul/div 2, add/sub 1.
int precedence(const Node& n) {
    switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
    }
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void print(const Node& n, std::string& out);

void print_child(const Node& child, int min_prec, std::string& out) {
    if (precedence(child) < min_prec) {
        out += '(';
        print(child, out);
        out += ')';
    } else {
        print(child, out);
    }
}

void print(const Node& n, std::string& out) {
    switch (n.kind) {
    case NodeKind::Number:
        if (n.value < 0 || std::signbit(n.value)) {
            // never produced by the parser; keep it re-parseable
            out += "(-" + format_number(-n.value) + ")";
        } else {
            out += format_number(n.value);
        }
        return;
    case NodeKind::Pi: out += "pi"; return;
    case NodeKind::Param: out += n.name; return;
    case NodeKind::Var: out += "x" + std::to_string(n.var + 1); return;
    case NodeKind::U: out += "u"; return;
    case NodeKind::Neg:
        out += '-';
        print_child(*n.args[0], 3, out);
        return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
        const int p = precedence(n);
        const char op = n.kind == NodeKind::Add ? '+' : n.kind == NodeKind::Sub ? '-' : n.kind == NodeKind::Mul ? '*' : '/';
        print_child(*n.args[0], p, out);
        out += op;
        print_child(*n.args[1], p + 1, out);
        return;
    }
    case NodeKind::Pow:
        print_child(*n.args[0], 5, out);
        out += '^';
        print_child(*n.args[1], 3, out);
        return;
    case NodeKind::Call:
        out += func_name(n.func);
        out += '(';
        for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ',';
            print(*n.args[i], out);
        }
        out += ')';
        return;
    }
}

void compile(const Node& n, std::vector<Instr>& prog, std::size_t depth, std::size_t& max_depth) {
    std::size_t d = depth;
    for (const auto& a : n.args) {
        compile(*a, prog, d, max_depth);
        ++d;
    }
    max_depth = std::max(max_depth, depth + 1);
    Instr ins{n.kind, n.func, static_cast<std::uint32_t>(n.var), n.value};
    if (n.kind == NodeKind::Pi) {
        ins.kind = NodeKind::Number;
        ins.value = std::numbers::pi;
    } else if (n.kind == NodeKind::Param) {
        ins.kind = NodeKind::Number;
    }
    prog.push_back(ins);
}

void scan(const Node& n, std::size_t& extent, bool& uses_u, bool& nonsmooth) {
    if (n.kind == NodeKind::Var) extent = std::max(extent, n.var + 1);
    if (n.kind == NodeKind::U) uses_u = true;
    if (n.kind == NodeKind::Call && (n.func == Func::Abs || n.func == Func::Min || n.func == Func::Max))
        nonsmooth = true;
    for (const auto& a : n.args) scan(*a, extent, uses_u, nonsmooth);
}

double checked_div(double a, double b) {
    if (b == 0.0) throw DomainError("division by zero");
    return a / b;
}

double checked_pow(double a, double b) {
    if (a == 0.0 && b < 0.0) throw DomainError("0 raised to a negative power");
    if (a < 0.0 && std::trunc(b) != b) throw DomainError("negative base raised to a non-integer power");
    return std::pow(a, b);
}

bool node_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    switch (a.kind) {
    case NodeKind::Number:
        if (a.value != b.value) return false;
        break;
    case NodeKind::Param:
        if (a.name != b.name || a.value != b.value) return false;
        break;
    case NodeKind::Var:
        if (a.var != b.var) return false;
        break;
    case NodeKind::Call:
        if (a.func != b.func) return false;
        break;
    default: break;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!node_equal(*a.args[i], *b.args[i])) return false;
    return true;
}

bool depends_on_u(const Node& n) {
    if (n.kind == NodeKind::U) return true;
    return std::any_of(n.args.begin(), n.args.end(), [](const NodePtr& a) { return depends_on_u(*a); });
}

bool is_const(const NodePtr& n, double v) { return n->kind == NodeKind::Number && n->value == v; }

NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a, 0)) return b;
    if (is_const(b, 0)) return a;
    return make_binary(NodeKind::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(b, 0)) return a;
    if (is_const(a, 0)) return make_unary(NodeKind::Neg, std::move(b));
    return make_binary(NodeKind::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a, 0) || is_const(b, 0)) return make_number(0.0);
    if (is_const(a, 1)) return b;
    if (is_const(b, 1)) return a;
    return make_binary(NodeKind::Mul, std::move(a), std::move(b));
}

NodePtr neg(NodePtr a) {
    if (is_const(a, 0)) return a;
    return make_unary(NodeKind::Neg, std::move(a));
}

NodePtr diff(const NodePtr& np) {
    const Node& n = *np;
    switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Pi:
    case NodeKind::Param:
    case NodeKind::Var: return make_number(0.0);
    case NodeKind::U: return make_number(1.0);
    case NodeKind::Neg: return neg(diff(n.args[0]));
    case NodeKind::Add: return add(diff(n.args[0]), diff(n.args[1]));
    case NodeKind::Sub: return sub(diff(n.args[0]), diff(n.args[1]));
    case NodeKind::Mul: {
        const auto& a = n.args[0];
        const auto& b = n.args[1];
        return add(mul(diff(a), b), mul(a, diff(b)));
    }
    case NodeKind::Div: {
        // (a'b - ab') / b^2
        const auto& a = n.args[0];
        const auto& b = n.args[1];
        auto num = sub(mul(diff(a), b), mul(a, diff(b)));
        if (is_const(num, 0)) return num;
        return make_binary(NodeKind::Div, num, make_binary(NodeKind::Pow, b, make_number(2.0)));
    }
    case NodeKind::Pow: {
        const auto& a = n.args[0];
        const auto& b = n.args[1];
        if (depends_on_u(*b)) throw NotDifferentiable("u in an exponent is outside the differentiable subset");
        auto da = diff(a);
        if (is_const(da, 0)) return da;
        // b * a^(b-1) * a'
        auto reduced = make_binary(NodeKind::Pow, a, sub(b, make_number(1.0)));
        return mul(mul(b, reduced), da);
    }
    case NodeKind::Call: {
        const auto& a = n.args[0];
        auto da = diff(a);
        if (is_const(da, 0)) return da;
        switch (n.func) {
        case Func::Sin: return mul(make_call(Func::Cos, {a}), da);
        case Func::Cos: return neg(mul(make_call(Func::Sin, {a}), da));
        case Func::Exp: return mul(np, da);
        case Func::Tanh:
            return mul(sub(make_number(1.0), make_binary(NodeKind::Pow, np, make_number(2.0))), da);
        default: break;
        }
        throw NotDifferentiable(std::string(func_name(n.func)) + " is not differentiable");
    }
    }
    throw NotDifferentiable("unsupported node");
}

}  // namespace

Expr::Expr() : Expr(make_number(0.0)) {}

Expr::Expr(NodePtr root) : root_(std::move(root)) {
    if (!root_) throw std::invalid_argument("Expr: null root");
    compile(*root_, program_, 0, max_stack_);
    scan(*root_, var_extent_, uses_u_, nonsmooth_);
}

double Expr::eval(std::span<const double> x, std::optional<double> u) const {
    if (uses_u_ && !u) throw std::invalid_argument("expression references u but no u was supplied");
    if (x.size() < var_extent_) throw std::invalid_argument("point has fewer coordinates than the expression uses");

    constexpr std::size_t kInline = 32;
    std::array<double, kInline> inline_stack;
    std::vector<double> heap_stack;
    double* st = inline_stack.data();
    if (max_stack_ > kInline) {
        heap_stack.resize(max_stack_);
        st = heap_stack.data();
    }
    std::size_t sp = 0;
    const double uval = u.value_or(0.0);
    for (const Instr& ins : program_) {
        switch (ins.kind) {
        case NodeKind::Number: st[sp++] = ins.value; break;
        case NodeKind::Var: st[sp++] = x[ins.index]; break;
        case NodeKind::U: st[sp++] = uval; break;
        case NodeKind::Neg: st[sp - 1] = -st[sp - 1]; break;
        case NodeKind::Add: --sp; st[sp - 1] += st[sp]; break;
        case NodeKind::Sub: --sp; st[sp - 1] -= st[sp]; break;
        case NodeKind::Mul: --sp; st[sp - 1] *= st[sp]; break;
        case NodeKind::Div: --sp; st[sp - 1] = checked_div(st[sp - 1], st[sp]); break;
        case NodeKind::Pow: --sp; st[sp - 1] = checked_pow(st[sp - 1], st[sp]); break;
        case NodeKind::Call:
            switch (ins.func) {
            case Func::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
            case Func::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
            case Func::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
            case Func::Tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
            case Func::Abs: st[sp - 1] = std::abs(st[sp - 1]); break;
            case Func::Min: --sp; st[sp - 1] = std::min(st[sp - 1], st[sp]); break;
            case Func::Max: --sp; st[sp - 1] = std::max(st[sp - 1], st[sp]); break;
            }
            break;
        case NodeKind::Pi:
        case NodeKind::Param: break;  // folded into Number by compile()
        }
    }
    return st[0];
}

std::string Expr::to_string() const {
    std::string out;
    print(*root_, out);
    return out;
}

bool structurally_equal(const Expr& a, const Expr& b) { return node_equal(a.root(), b.root()); }

Expr parse_expr(std::string_view source, std::size_t n_vars, bool allow_u, const ParamTable& params) {
    Parser p(source, n_vars, allow_u, params);
    return Expr(p.parse());
}

Expr derivative_u(const Expr& e) {
    if (e.has_nonsmooth()) throw NotDifferentiable("min/max/abs are not differentiable: " + e.to_string());
    return Expr(diff(e.root_ptr()));
}

// ---------------------------------------------------------------------------

CoefficientField::CoefficientField(FieldKind k, std::size_t dim, std::vector<Expr> entries, bool periodic)
    : kind_(k), dim_(dim), entries_(std::move(entries)), periodic_(periodic) {
    if (dim_ == 0) throw std::invalid_argument("CoefficientField: dimension must be >= 1");
    for (const auto& e : entries_)
        if (e.var_extent() > dim_) throw VariableOutOfRange("field entry references x beyond dimension");
}

CoefficientField CoefficientField::scalar(std::size_t dim, Expr e, bool periodic) {
    return CoefficientField(FieldKind::Scalar, dim, {std::move(e)}, periodic);
}

CoefficientField CoefficientField::vector(std::size_t dim, std::vector<Expr> comps, bool periodic) {
    if (comps.size() != dim) throw std::invalid_argument("vector field needs exactly N components");
    return CoefficientField(FieldKind::Vector, dim, std::move(comps), periodic);
}

CoefficientField CoefficientField::symmetric_matrix(std::size_t dim, std::vector<Expr> upper, bool periodic) {
    if (upper.size() != dim * (dim + 1) / 2) throw std::invalid_argument("matrix field needs N(N+1)/2 upper entries");
    return CoefficientField(FieldKind::SymmetricMatrix, dim, std::move(upper), periodic);
}

const Expr& CoefficientField::entry(std::size_t i, std::size_t j) const {
    switch (kind_) {
    case FieldKind::Scalar: return entries_[0];
    case FieldKind::Vector: return entries_.at(i);
    case FieldKind::SymmetricMatrix: {
        if (i > j) std::swap(i, j);
        // offset of row i in the packed upper triangle
        const std::size_t row = i * dim_ - i * (i - 1) / 2;
        return entries_.at(row + (j - i));
    }
    }
    return entries_[0];
}

bool CoefficientField::uses_u() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const Expr& e) { return e.uses_u(); });
}

bool CoefficientField::uses_x() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const Expr& e) { return e.uses_x(); });
}

double CoefficientField::eval_scalar(std::span<const double> x, std::optional<double> u) const {
    return entries_[0].eval(x, u);
}

void CoefficientField::eval_vector(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) out[i] = entries_[i].eval(x);
}

void CoefficientField::eval_matrix(std::span<const double> x, std::span<double> out) const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = i; j < dim_; ++j) {
            const double v = entries_[k++].eval(x);
            out[i * dim_ + j] = v;
            out[j * dim_ + i] = v;
        }
}

PeriodicityReport validate_periodicity(const CoefficientField& field, std::size_t n_random, std::uint64_t seed,
                                       double tol) {
    PeriodicityReport rep;
    const std::size_t n = field.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(n), xs(n);
    const bool with_u = field.uses_u();
    for (std::size_t s = 0; s < n_random; ++s) {
        for (auto& xi : x) xi = unit(rng);
        const double u = with_u ? unit(rng) : 0.0;
        std::optional<double> uo = with_u ? std::optional<double>(u) : std::nullopt;
        for (std::size_t d = 0; d < n; ++d) {
            xs = x;
            xs[d] += 1.0;
            for (const auto& e : field.entries()) {
                const double diff = std::abs(e.eval(xs, uo) - e.eval(x, uo));
                ++rep.samples;
                if (diff > rep.worst) {
                    rep.worst = diff;
                    rep.witness = x;
                    if (with_u) rep.witness.push_back(u);
                }
            }
        }
    }
    rep.pass = rep.worst <= tol;
    return rep;
}

}  // namespace spreadkit::fieldlang
