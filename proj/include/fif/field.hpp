#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fif/errors.hpp"
#include "fif/net.hpp"

namespace fif {

namespace detail {

class FieldImpl {
public:
    virtual ~FieldImpl() = default;
    virtual double eval(std::span<const double> x) const = 0;
    virtual void print(std::ostream& os) const = 0;
    virtual bool is_constant(double* value) const { (void)value; return false; }
};

// ---------------------------------------------------------------------------
// Expression AST
// ---------------------------------------------------------------------------

enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class FnOp { Sin, Cos, Abs, Exp };

class NumNode;
class ExprNode {
public:
    virtual ~ExprNode() = default;
    virtual double eval(std::span<const double> x) const = 0;
    virtual void print(std::ostream& os) const = 0;
};

using ExprPtr = std::shared_ptr<const ExprNode>;

class NumNode final : public ExprNode {
public:
    explicit NumNode(double v) : v_(v) {}
    double eval(std::span<const double>) const override { return v_; }
    void print(std::ostream& os) const override {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << v_;
        os << tmp.str();
    }
    double value() const { return v_; }

private:
    double v_;
};

class VarNode final : public ExprNode {
public:
    explicit VarNode(int index) : index_(index) {}
    double eval(std::span<const double> x) const override {
        if (index_ >= static_cast<int>(x.size()))
            throw NumericalError("eval: variable x" + std::to_string(index_ + 1) +
                                 " out of range for a " + std::to_string(x.size()) +
                                 "-dimensional point");
        return x[static_cast<std::size_t>(index_)];
    }
    void print(std::ostream& os) const override { os << 'x' << (index_ + 1); }

private:
    int index_; // 0-based
};

class NegNode final : public ExprNode {
public:
    explicit NegNode(ExprPtr c) : c_(std::move(c)) {}
    double eval(std::span<const double> x) const override { return -c_->eval(x); }
    void print(std::ostream& os) const override {
        os << "(-";
        c_->print(os);
        os << ')';
    }

private:
    ExprPtr c_;
};

inline std::string subexpr_text(const ExprNode& n) {
    std::ostringstream os;
    n.print(os);
    return os.str();
}

class BinNode final : public ExprNode {
public:
    BinNode(BinOp op, ExprPtr l, ExprPtr r) : op_(op), l_(std::move(l)), r_(std::move(r)) {}
    double eval(std::span<const double> x) const override {
        const double a = l_->eval(x);
        const double b = r_->eval(x);
        double v = 0.0;
        switch (op_) {
            case BinOp::Add: v = a + b; break;
            case BinOp::Sub: v = a - b; break;
            case BinOp::Mul: v = a * b; break;
            case BinOp::Div: v = a / b; break;
            case BinOp::Pow: v = std::pow(a, b); break;
        }
        if (!std::isfinite(v))
            throw NumericalError("eval: non-finite result in " + subexpr_text(*this));
        return v;
    }
    void print(std::ostream& os) const override {
        os << '(';
        l_->print(os);
        switch (op_) {
            case BinOp::Add: os << " + "; break;
            case BinOp::Sub: os << " - "; break;
            case BinOp::Mul: os << " * "; break;
            case BinOp::Div: os << " / "; break;
            case BinOp::Pow: os << " ^ "; break;
        }
        r_->print(os);
        os << ')';
    }

private:
    BinOp op_;
    ExprPtr l_, r_;
};

class FnNode final : public ExprNode {
public:
    FnNode(FnOp fn, ExprPtr arg) : fn_(fn), arg_(std::move(arg)) {}
    double eval(std::span<const double> x) const override {
        const double a = arg_->eval(x);
        double v = 0.0;
        switch (fn_) {
            case FnOp::Sin: v = std::sin(a); break;
            case FnOp::Cos: v = std::cos(a); break;
            case FnOp::Abs: v = std::abs(a); break;
            case FnOp::Exp: v = std::exp(a); break;
        }
        if (!std::isfinite(v))
            throw NumericalError("eval: non-finite result in " + subexpr_text(*this));
        return v;
    }
    void print(std::ostream& os) const override {
        switch (fn_) {
            case FnOp::Sin: os << "sin"; break;
            case FnOp::Cos: os << "cos"; break;
            case FnOp::Abs: os << "abs"; break;
            case FnOp::Exp: os << "exp"; break;
        }
        os << '(';
        arg_->print(os);
        os << ')';
    }

private:
    FnOp fn_;
    ExprPtr arg_;
};

// Recursive-descent parser. Grammar (loosest to tightest):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := primary ['^' unary]          (right-associative)
//   primary:= number | var | name '(' expr ')' | '(' expr ')'
class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ExprPtr parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty expression", 0);
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ < text_.size())
            throw ParseError("unexpected trailing input '" + std::string(1, text_[pos_]) + "'",
                             pos_);
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool peek_is(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    bool consume(char c) {
        if (peek_is(c)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!consume(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            if (consume('+'))
                e = std::make_shared<BinNode>(BinOp::Add, e, parse_term());
            else if (consume('-'))
                e = std::make_shared<BinNode>(BinOp::Sub, e, parse_term());
            else
                return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_unary();
        for (;;) {
            if (consume('*'))
                e = std::make_shared<BinNode>(BinOp::Mul, e, parse_unary());
            else if (consume('/'))
                e = std::make_shared<BinNode>(BinOp::Div, e, parse_unary());
            else
                return e;
        }
    }

    ExprPtr parse_unary() {
        if (consume('-')) return std::make_shared<NegNode>(parse_unary());
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_primary();
        if (consume('^'))
            return std::make_shared<BinNode>(BinOp::Pow, base, parse_unary());
        return base;
    }

    ExprPtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_expr();
            expect(')');
            return e;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    ExprPtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        // scientific-notation tail
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(std::string(text_.substr(start, pos_ - start)), &used);
            if (used != pos_ - start) throw std::invalid_argument("partial");
            return std::make_shared<NumNode>(v);
        } catch (const std::exception&) {
            throw ParseError("malformed number", start);
        }
    }

    ExprPtr parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_]))))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9')
            return std::make_shared<VarNode>(name[1] - '1');
        // function call
        FnOp fn;
        if (name == "sin") fn = FnOp::Sin;
        else if (name == "cos") fn = FnOp::Cos;
        else if (name == "abs") fn = FnOp::Abs;
        else if (name == "exp") fn = FnOp::Exp;
        else throw ParseError("unknown identifier '" + name + "'", start);
        if (!peek_is('('))
            throw ParseError("function '" + name + "' requires an argument list", pos_);
        ++pos_;
        ExprPtr arg = parse_expr();
        if (consume(','))
            throw ParseError("function '" + name + "' takes exactly one argument", pos_ - 1);
        expect(')');
        return std::make_shared<FnNode>(fn, arg);
    }
};

class ExprField final : public FieldImpl {
public:
    explicit ExprField(ExprPtr root) : root_(std::move(root)) {}
    double eval(std::span<const double> x) const override { return root_->eval(x); }
    void print(std::ostream& os) const override { root_->print(os); }
    bool is_constant(double* value) const override {
        if (auto num = dynamic_cast<const NumNode*>(root_.get())) {
            if (value) *value = num->value();
            return true;
        }
        return false;
    }

private:
    ExprPtr root_;
};

class ConstField final : public FieldImpl {
public:
    explicit ConstField(double v) : v_(v) {}
    double eval(std::span<const double>) const override { return v_; }
    void print(std::ostream& os) const override {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << v_;
        os << tmp.str();
    }
    bool is_constant(double* value) const override {
        if (value) *value = v_;
        return true;
    }

private:
    double v_;
};

// Values on a structured grid over a box, evaluated by multilinear
// interpolation between the 2^q surrounding samples.
class GridField final : public FieldImpl {
public:
    GridField(std::vector<std::size_t> dims, std::vector<double> values,
              std::vector<Interval> box)
        : dims_(std::move(dims)), values_(std::move(values)), box_(std::move(box)) {
        if (dims_.empty() || dims_.size() != box_.size())
            throw ValidationError("GridField: dims/box mismatch");
        std::size_t n = 1;
        for (std::size_t d : dims_) {
            if (d < 2) throw ValidationError("GridField: need >= 2 samples per axis");
            n *= d;
        }
        if (n != values_.size())
            throw ValidationError("GridField: values length != product of dims");
        for (double v : values_)
            if (!std::isfinite(v)) throw ValidationError("GridField: non-finite sample");
        strides_.assign(dims_.size(), 1);
        for (std::size_t k = dims_.size(); k-- > 1;)
            strides_[k - 1] = strides_[k] * dims_[k];
    }

    double eval(std::span<const double> x) const override {
        const std::size_t q = dims_.size();
        if (x.size() != q) throw ValidationError("GridField: point dimension mismatch");
        std::vector<std::size_t> i0(q);
        std::vector<double> t(q);
        for (std::size_t k = 0; k < q; ++k) {
            const double u = (x[k] - box_[k].lo) / box_[k].length();
            if (u < -1e-12 || u > 1.0 + 1e-12)
                throw ValidationError("GridField: point outside box");
            const double pos = std::min(std::max(u, 0.0), 1.0) * static_cast<double>(dims_[k] - 1);
            std::size_t i = static_cast<std::size_t>(pos);
            if (i >= dims_[k] - 1) i = dims_[k] - 2;
            i0[k] = i;
            t[k] = pos - static_cast<double>(i);
        }
        double acc = 0.0;
        const std::size_t corners = std::size_t{1} << q;
        for (std::size_t c = 0; c < corners; ++c) {
            double w = 1.0;
            std::size_t flat = 0;
            for (std::size_t k = 0; k < q; ++k) {
                const bool hi = (c >> k) & 1u;
                w *= hi ? t[k] : 1.0 - t[k];
                flat += (i0[k] + (hi ? 1 : 0)) * strides_[k];
            }
            acc += w * values_[flat];
        }
        return acc;
    }

    void print(std::ostream& os) const override {
        os << "grid[";
        for (std::size_t k = 0; k < dims_.size(); ++k) os << (k ? "x" : "") << dims_[k];
        os << ']';
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> values_;
    std::vector<Interval> box_;
    std::vector<std::size_t> strides_;
};

// Restriction of a q-variate field to one axis, the other coordinates
// pinned. Evaluates the inner field at the assembled full point.
class SliceField final : public FieldImpl {
public:
    SliceField(std::shared_ptr<const FieldImpl> inner, int keep_axis,
               std::vector<double> pinned_full_point)
        : inner_(std::move(inner)), keep_axis_(keep_axis),
          point_(std::move(pinned_full_point)) {}

    double eval(std::span<const double> x) const override {
        if (x.size() != 1) throw ValidationError("SliceField: expects a 1-D point");
        std::vector<double> full = point_;
        full[static_cast<std::size_t>(keep_axis_)] = x[0];
        return inner_->eval(full);
    }
    void print(std::ostream& os) const override {
        os << "slice[axis " << (keep_axis_ + 1) << " of ";
        inner_->print(os);
        os << ']';
    }

private:
    std::shared_ptr<const FieldImpl> inner_;
    int keep_axis_;
    std::vector<double> point_;
};

} // namespace detail

/// Evaluable scalar function on a box: parsed expression, constant, or
/// sampled grid. Immutable; evaluation is pure.
class Field {
public:
    Field() = default;

    double eval(std::span<const double> x) const {
        check();
        return impl_->eval(x);
    }
    double eval(std::initializer_list<double> x) const {
        return eval(std::span<const double>(x.begin(), x.size()));
    }

    std::string to_string() const {
        check();
        std::ostringstream os;
        impl_->print(os);
        return os.str();
    }

    bool is_constant(double* value = nullptr) const {
        check();
        return impl_->is_constant(value);
    }

    static Field constant(double v) {
        return Field(std::make_shared<detail::ConstField>(v));
    }

    static Field sampled(std::vector<std::size_t> dims, std::vector<double> values,
                         std::vector<Interval> box) {
        return Field(std::make_shared<detail::GridField>(std::move(dims), std::move(values),
                                                         std::move(box)));
    }

    /// 1-D restriction along `keep_axis`, the remaining coordinates pinned
    /// at the entries of `full_point`.
    Field sliced(int keep_axis, std::vector<double> full_point) const {
        check();
        return Field(std::make_shared<detail::SliceField>(impl_, keep_axis,
                                                          std::move(full_point)));
    }

    explicit operator bool() const { return static_cast<bool>(impl_); }

private:
    explicit Field(std::shared_ptr<const detail::FieldImpl> impl) : impl_(std::move(impl)) {}
    void check() const {
        if (!impl_) throw ValidationError("Field: empty");
    }
    std::shared_ptr<const detail::FieldImpl> impl_;

    friend Field parse(const std::string&);
};

/// Parse an arithmetic expression over x1..x9 with + - * / ^, parentheses,
/// and sin/cos/abs/exp.
inline Field parse(const std::string& text) {
    if (text.empty()) throw ParseError("empty expression", 0);
    detail::Parser p(text);
    return Field(std::make_shared<detail::ExprField>(p.parse()));
}

/// Sampled estimate of the sup norm of |field| over the net's box, with the
/// per-cell maxima table. Sampling under-estimates the true sup for
/// non-constant fields; exact for constants.
struct SupNormEstimate {
    double global = 0.0;
    std::vector<double> cell_max; // row-major over cells, last axis fastest
};

inline SupNormEstimate sup_norm(const Field& field, const Net& net, int samples_per_cell = 9) {
    if (samples_per_cell < 2)
        throw ValidationError("sup_norm: need >= 2 samples per axis per cell");
    const int q = net.dim();
    std::vector<int> cells(static_cast<std::size_t>(q));
    for (int k = 0; k < q; ++k) cells[static_cast<std::size_t>(k)] = net.subintervals(k);

    SupNormEstimate out;
    out.cell_max.assign(net.cell_count(), 0.0);

    std::vector<int> ci(static_cast<std::size_t>(q), 0); // 0-based cell multi-index
    std::vector<int> si(static_cast<std::size_t>(q), 0); // sample index within cell
    std::vector<double> unit(static_cast<std::size_t>(q));
    for (std::size_t cflat = 0; cflat < out.cell_max.size(); ++cflat) {
        // decode cell multi-index
        std::size_t rem = cflat;
        for (int k = q - 1; k >= 0; --k) {
            ci[static_cast<std::size_t>(k)] =
                static_cast<int>(rem % static_cast<std::size_t>(cells[static_cast<std::size_t>(k)]));
            rem /= static_cast<std::size_t>(cells[static_cast<std::size_t>(k)]);
        }
        double best = 0.0;
        std::fill(si.begin(), si.end(), 0);
        for (;;) {
            for (int k = 0; k < q; ++k) {
                const auto& knots = net.axis(k).knots;
                const double a = knots[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])];
                const double b = knots[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)]) + 1];
                const double t = static_cast<double>(si[static_cast<std::size_t>(k)]) /
                                 static_cast<double>(samples_per_cell - 1);
                unit[static_cast<std::size_t>(k)] = a + t * (b - a);
            }
            const auto pt = denormalize(net, unit);
            best = std::max(best, std::abs(field.eval(pt)));
            // odometer
            int k = q - 1;
            for (; k >= 0; --k) {
                if (++si[static_cast<std::size_t>(k)] < samples_per_cell) break;
                si[static_cast<std::size_t>(k)] = 0;
            }
            if (k < 0) break;
        }
        out.cell_max[cflat] = best;
        out.global = std::max(out.global, best);
    }
    return out;
}

} // namespace fif
