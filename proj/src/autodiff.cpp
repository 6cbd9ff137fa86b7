#include "geff/autodiff.hpp"

#include <cmath>

namespace geff {

Tensor glorot_uniform(int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t(fan_in, fan_out);
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

const Tensor& Tape::v(Value x) const {
    if (x.id < 0 || x.id >= static_cast<int>(nodes_.size()))
        throw Error(ErrorCode::InvalidArgument, "stale tape value");
    return nodes_[x.id].val;
}

const Tensor& Tape::val(Value x) const { return v(x); }

Tensor* Tape::param_storage(Value x) const {
    if (x.id < 0 || x.id >= static_cast<int>(nodes_.size())) return nullptr;
    return nodes_[x.id].storage;
}

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
        n.grad = Tensor::zeros(n.val.rows, n.val.cols);
        n.grad_alloc = true;
    }
    return n.grad;
}

const Tensor& Tape::grad(Value x) {
    if (x.id < 0 || x.id >= static_cast<int>(nodes_.size()))
        throw Error(ErrorCode::InvalidArgument, "stale tape value");
    return grad_buf(x.id);
}

Value Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::constant(Tensor t) {
    Node n;
    n.op = Op::Constant;
    n.val = std::move(t);
    return push(std::move(n));
}

Value Tape::param(Tensor* storage) {
    auto it = param_cache_.find(storage);
    if (it != param_cache_.end()) return Value{it->second};
    Node n;
    n.op = Op::Param;
    n.val = *storage;
    n.storage = storage;
    Value v = push(std::move(n));
    param_cache_[storage] = v.id;
    return v;
}

std::vector<Value> Tape::param_nodes() const {
    std::vector<Value> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
        if (nodes_[i].op == Op::Param) out.push_back(Value{i});
    return out;
}

void Tape::check_same_or_scalar(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b) && !a.is_scalar() && !b.is_scalar())
        throw ShapeError(std::string(op) + ": shapes " + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols));
}

namespace {

// Applies f(a_i, b_i) with 1x1 broadcast on either side.
template <typename F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, F f) {
    const Tensor& shape = a.is_scalar() ? b : a;
    Tensor out(shape.rows, shape.cols);
    const bool sa = a.is_scalar(), sb = b.is_scalar();
    const double va = sa ? a.data[0] : 0.0, vb = sb ? b.data[0] : 0.0;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = f(sa ? va : a.data[i], sb ? vb : b.data[i]);
    return out;
}

}  // namespace

Value Tape::add(Value a, Value b) {
    check_same_or_scalar(v(a), v(b), "add");
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.val = broadcast_apply(v(a), v(b), [](double x, double y) { return x + y; });
    return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
    check_same_or_scalar(v(a), v(b), "sub");
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.val = broadcast_apply(v(a), v(b), [](double x, double y) { return x - y; });
    return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
    check_same_or_scalar(v(a), v(b), "mul");
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.val = broadcast_apply(v(a), v(b), [](double x, double y) { return x * y; });
    return push(std::move(n));
}

Value Tape::div(Value a, Value b) {
    check_same_or_scalar(v(a), v(b), "div");
    Node n;
    n.op = Op::Div;
    n.a = a.id;
    n.b = b.id;
    n.val = broadcast_apply(v(a), v(b), [](double x, double y) { return x / y; });
    return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
    const Tensor& A = v(a);
    const Tensor& B = v(b);
    if (A.cols != B.rows) throw ShapeError("matmul: inner dimensions disagree");
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.val = Tensor(A.rows, B.cols);
    n.val.map().noalias() = A.map() * B.map();
    return push(std::move(n));
}

Value Tape::add_rowvec(Value x, Value bias) {
    const Tensor& X = v(x);
    const Tensor& B = v(bias);
    if (B.rows != 1 || B.cols != X.cols) throw ShapeError("add_rowvec: bias must be 1xN");
    Node n;
    n.op = Op::AddRowVec;
    n.a = x.id;
    n.b = bias.id;
    n.val = X;
    for (int r = 0; r < X.rows; ++r) {
        double* row = n.val.row_ptr(r);
        for (int c = 0; c < X.cols; ++c) row[c] += B.data[c];
    }
    return push(std::move(n));
}

Value Tape::mul_colvec(Value x, Value col) {
    const Tensor& X = v(x);
    const Tensor& C = v(col);
    if (C.cols != 1 || C.rows != X.rows) throw ShapeError("mul_colvec: scale must be Mx1");
    Node n;
    n.op = Op::MulColVec;
    n.a = x.id;
    n.b = col.id;
    n.val = X;
    for (int r = 0; r < X.rows; ++r) {
        double* row = n.val.row_ptr(r);
        const double s = C.data[r];
        for (int c = 0; c < X.cols; ++c) row[c] *= s;
    }
    return push(std::move(n));
}

#define GEFF_UNARY(NAME, OP_ENUM, EXPR)                  \
    Value Tape::NAME(Value x) {                          \
        Node n;                                          \
        n.op = Op::OP_ENUM;                              \
        n.a = x.id;                                      \
        n.val = v(x);                                    \
        for (double& t : n.val.data) t = (EXPR);         \
        return push(std::move(n));                       \
    }

GEFF_UNARY(relu, Relu, t > 0 ? t : 0.0)
GEFF_UNARY(sigmoid, Sigmoid, 1.0 / (1.0 + std::exp(-t)))
GEFF_UNARY(exp, Exp, std::exp(t))
GEFF_UNARY(sqrt, Sqrt, std::sqrt(t))
GEFF_UNARY(square, Square, t * t)
GEFF_UNARY(abs, Abs, std::fabs(t))
GEFF_UNARY(neg, Neg, -t)
#undef GEFF_UNARY

Value Tape::scale(Value x, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = x.id;
    n.c0 = c;
    n.val = v(x);
    for (double& t : n.val.data) t *= c;
    return push(std::move(n));
}

Value Tape::add_const(Value x, double c) {
    Node n;
    n.op = Op::AddConst;
    n.a = x.id;
    n.c0 = c;
    n.val = v(x);
    for (double& t : n.val.data) t += c;
    return push(std::move(n));
}

Value Tape::concat_cols(Value a, Value b) {
    const Tensor& A = v(a);
    const Tensor& B = v(b);
    if (A.rows != B.rows) throw ShapeError("concat_cols: row counts disagree");
    Node n;
    n.op = Op::ConcatCols;
    n.a = a.id;
    n.b = b.id;
    n.i0 = A.cols;
    n.val = Tensor(A.rows, A.cols + B.cols);
    for (int r = 0; r < A.rows; ++r) {
        double* out = n.val.row_ptr(r);
        std::copy(A.row_ptr(r), A.row_ptr(r) + A.cols, out);
        std::copy(B.row_ptr(r), B.row_ptr(r) + B.cols, out + A.cols);
    }
    return push(std::move(n));
}

Value Tape::slice_cols(Value x, int c0, int c1) {
    const Tensor& X = v(x);
    if (c0 < 0 || c1 > X.cols || c0 >= c1) throw ShapeError("slice_cols: bad range");
    Node n;
    n.op = Op::SliceCols;
    n.a = x.id;
    n.i0 = c0;
    n.i1 = c1;
    n.val = Tensor(X.rows, c1 - c0);
    for (int r = 0; r < X.rows; ++r)
        std::copy(X.row_ptr(r) + c0, X.row_ptr(r) + c1, n.val.row_ptr(r));
    return push(std::move(n));
}

Value Tape::reshape(Value x, int r, int c) {
    const Tensor& X = v(x);
    if (static_cast<std::size_t>(r) * c != X.size()) throw ShapeError("reshape: size mismatch");
    Node n;
    n.op = Op::Reshape;
    n.a = x.id;
    n.val = X;
    n.val.rows = r;
    n.val.cols = c;
    return push(std::move(n));
}

Value Tape::gather_rows(Value x, std::vector<int> indices) {
    const Tensor& X = v(x);
    Node n;
    n.op = Op::GatherRows;
    n.a = x.id;
    n.val = Tensor(static_cast<int>(indices.size()), X.cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int src = indices[i];
        if (src < 0 || src >= X.rows) throw ShapeError("gather_rows: index out of range");
        std::copy(X.row_ptr(src), X.row_ptr(src) + X.cols, n.val.row_ptr(static_cast<int>(i)));
    }
    n.indices = std::move(indices);
    return push(std::move(n));
}

Value Tape::pool_rows(Value x, std::shared_ptr<const PoolPlan> plan) {
    const Tensor& X = v(x);
    Node n;
    n.op = Op::PoolRows;
    n.a = x.id;
    n.val = Tensor(plan->out_rows, X.cols);
    for (int i = 0; i < plan->out_rows; ++i) {
        double* out = n.val.row_ptr(i);
        for (int j = plan->row_ptr[i]; j < plan->row_ptr[i + 1]; ++j) {
            const double w = plan->weight[j];
            const double* src = X.row_ptr(plan->src_row[j]);
            for (int c = 0; c < X.cols; ++c) out[c] += w * src[c];
        }
    }
    n.pool = std::move(plan);
    return push(std::move(n));
}

Value Tape::row_sum(Value x) {
    const Tensor& X = v(x);
    Node n;
    n.op = Op::RowSum;
    n.a = x.id;
    n.val = Tensor(X.rows, 1);
    for (int r = 0; r < X.rows; ++r) {
        double s = 0;
        const double* row = X.row_ptr(r);
        for (int c = 0; c < X.cols; ++c) s += row[c];
        n.val.data[r] = s;
    }
    return push(std::move(n));
}

Value Tape::sum_all(Value x) {
    const Tensor& X = v(x);
    Node n;
    n.op = Op::SumAll;
    n.a = x.id;
    double s = 0;
    for (double t : X.data) s += t;
    n.val = Tensor::scalar(s);
    return push(std::move(n));
}

Value Tape::segment_sum_rows(Value x, int segment) {
    const Tensor& X = v(x);
    if (segment < 1 || X.rows % segment != 0)
        throw ShapeError("segment_sum_rows: rows not divisible by segment");
    Node n;
    n.op = Op::SegmentSumRows;
    n.a = x.id;
    n.i0 = segment;
    n.val = Tensor(X.rows / segment, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        double* out = n.val.row_ptr(r / segment);
        const double* src = X.row_ptr(r);
        for (int c = 0; c < X.cols; ++c) out[c] += src[c];
    }
    return push(std::move(n));
}

Value Tape::drop_segment_tail(Value x, int segment_in, int keep) {
    const Tensor& X = v(x);
    if (segment_in < 1 || keep < 1 || keep > segment_in || X.rows % segment_in != 0)
        throw ShapeError("drop_segment_tail: bad segment spec");
    const int groups = X.rows / segment_in;
    Node n;
    n.op = Op::DropSegmentTail;
    n.a = x.id;
    n.i0 = segment_in;
    n.i1 = keep;
    n.val = Tensor(groups * keep, X.cols);
    for (int g = 0; g < groups; ++g)
        for (int r = 0; r < keep; ++r)
            std::copy(X.row_ptr(g * segment_in + r), X.row_ptr(g * segment_in + r) + X.cols,
                      n.val.row_ptr(g * keep + r));
    return push(std::move(n));
}

Value Tape::normalize_rows(Value x, double eps) {
    const Tensor& X = v(x);
    Node n;
    n.op = Op::NormalizeRows;
    n.a = x.id;
    n.c0 = eps;
    n.val = Tensor(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        const double* src = X.row_ptr(r);
        double sq = 0;
        for (int c = 0; c < X.cols; ++c) sq += src[c] * src[c];
        const double norm = std::sqrt(sq + eps * eps);
        double* out = n.val.row_ptr(r);
        for (int c = 0; c < X.cols; ++c) out[c] = src[c] / norm;
    }
    return push(std::move(n));
}

Value Tape::softmax_rows(Value x) {
    const Tensor& X = v(x);
    Node n;
    n.op = Op::SoftmaxRows;
    n.a = x.id;
    n.val = Tensor(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        const double* src = X.row_ptr(r);
        double m = src[0];
        for (int c = 1; c < X.cols; ++c) m = std::max(m, src[c]);
        double z = 0;
        double* out = n.val.row_ptr(r);
        for (int c = 0; c < X.cols; ++c) {
            out[c] = std::exp(src[c] - m);
            z += out[c];
        }
        for (int c = 0; c < X.cols; ++c) out[c] /= z;
    }
    return push(std::move(n));
}

void Tape::backward(Value scalar_output) {
    const int root = scalar_output.id;
    if (root < 0 || root >= static_cast<int>(nodes_.size()))
        throw Error(ErrorCode::InvalidArgument, "backward: stale value");
    if (!nodes_[root].val.is_scalar()) throw NotScalarError("backward target must be 1x1");
    grad_buf(root).data[0] += 1.0;

    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.grad_alloc) continue;
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::Constant:
            case Op::Param:
                break;
            case Op::Add: {
                auto accum = [&](int target) {
                    Tensor& d = grad_buf(target);
                    if (d.is_scalar() && !g.is_scalar()) {
                        double s = 0;
                        for (double t : g.data) s += t;
                        d.data[0] += s;
                    } else {
                        for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += g.data[i];
                    }
                };
                accum(n.a);
                accum(n.b);
                break;
            }
            case Op::Sub: {
                Tensor& da = grad_buf(n.a);
                if (da.is_scalar() && !g.is_scalar()) {
                    double s = 0;
                    for (double t : g.data) s += t;
                    da.data[0] += s;
                } else {
                    for (std::size_t i = 0; i < da.size(); ++i) da.data[i] += g.data[i];
                }
                Tensor& db = grad_buf(n.b);
                if (db.is_scalar() && !g.is_scalar()) {
                    double s = 0;
                    for (double t : g.data) s += t;
                    db.data[0] -= s;
                } else {
                    for (std::size_t i = 0; i < db.size(); ++i) db.data[i] -= g.data[i];
                }
                break;
            }
            case Op::Mul:
            case Op::Div: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                Tensor& da = grad_buf(n.a);
                Tensor& db = grad_buf(n.b);
                const bool sa = A.is_scalar(), sb = B.is_scalar();
                const std::size_t count = g.size();
                for (std::size_t i = 0; i < count; ++i) {
                    const double av = sa ? A.data[0] : A.data[i];
                    const double bv = sb ? B.data[0] : B.data[i];
                    const double gv = g.data[i];
                    double ga, gb;
                    if (n.op == Op::Mul) {
                        ga = gv * bv;
                        gb = gv * av;
                    } else {
                        ga = gv / bv;
                        gb = -gv * av / (bv * bv);
                    }
                    da.data[sa ? 0 : i] += ga;
                    db.data[sb ? 0 : i] += gb;
                }
                break;
            }
            case Op::MatMul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                grad_buf(n.a).map().noalias() += g.map() * B.map().transpose();
                grad_buf(n.b).map().noalias() += A.map().transpose() * g.map();
                break;
            }
            case Op::AddRowVec: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += g.data[i];
                Tensor& db = grad_buf(n.b);
                for (int r = 0; r < g.rows; ++r) {
                    const double* row = g.row_ptr(r);
                    for (int c = 0; c < g.cols; ++c) db.data[c] += row[c];
                }
                break;
            }
            case Op::MulColVec: {
                const Tensor& X = nodes_[n.a].val;
                const Tensor& C = nodes_[n.b].val;
                Tensor& dx = grad_buf(n.a);
                Tensor& dc = grad_buf(n.b);
                for (int r = 0; r < g.rows; ++r) {
                    const double s = C.data[r];
                    const double* grow = g.row_ptr(r);
                    const double* xrow = X.row_ptr(r);
                    double* dxrow = dx.row_ptr(r);
                    double acc = 0;
                    for (int c = 0; c < g.cols; ++c) {
                        dxrow[c] += grow[c] * s;
                        acc += grow[c] * xrow[c];
                    }
                    dc.data[r] += acc;
                }
                break;
            }
            case Op::Relu: {
                const Tensor& X = nodes_[n.a].val;
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i)
                    if (X.data[i] > 0) dx.data[i] += g.data[i];
                break;
            }
            case Op::Sigmoid: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i) {
                    const double y = n.val.data[i];
                    dx.data[i] += g.data[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::Exp: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += g.data[i] * n.val.data[i];
                break;
            }
            case Op::Sqrt: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i)
                    dx.data[i] += g.data[i] * 0.5 / n.val.data[i];
                break;
            }
            case Op::Square: {
                const Tensor& X = nodes_[n.a].val;
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i)
                    dx.data[i] += g.data[i] * 2.0 * X.data[i];
                break;
            }
            case Op::Abs: {
                const Tensor& X = nodes_[n.a].val;
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i) {
                    const double s = X.data[i] > 0 ? 1.0 : (X.data[i] < 0 ? -1.0 : 0.0);
                    dx.data[i] += g.data[i] * s;
                }
                break;
            }
            case Op::Neg: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] -= g.data[i];
                break;
            }
            case Op::Scale: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += g.data[i] * n.c0;
                break;
            }
            case Op::AddConst: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += g.data[i];
                break;
            }
            case Op::ConcatCols: {
                Tensor& da = grad_buf(n.a);
                Tensor& db = grad_buf(n.b);
                const int ca = n.i0;
                for (int r = 0; r < g.rows; ++r) {
                    const double* grow = g.row_ptr(r);
                    double* arow = da.row_ptr(r);
                    double* brow = db.row_ptr(r);
                    for (int c = 0; c < ca; ++c) arow[c] += grow[c];
                    for (int c = ca; c < g.cols; ++c) brow[c - ca] += grow[c];
                }
                break;
            }
            case Op::SliceCols: {
                Tensor& dx = grad_buf(n.a);
                for (int r = 0; r < g.rows; ++r) {
                    const double* grow = g.row_ptr(r);
                    double* drow = dx.row_ptr(r) + n.i0;
                    for (int c = 0; c < g.cols; ++c) drow[c] += grow[c];
                }
                break;
            }
            case Op::Reshape: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += g.data[i];
                break;
            }
            case Op::GatherRows: {
                Tensor& dx = grad_buf(n.a);
                for (std::size_t i = 0; i < n.indices.size(); ++i) {
                    const double* grow = g.row_ptr(static_cast<int>(i));
                    double* drow = dx.row_ptr(n.indices[i]);
                    for (int c = 0; c < g.cols; ++c) drow[c] += grow[c];
                }
                break;
            }
            case Op::PoolRows: {
                Tensor& dx = grad_buf(n.a);
                const PoolPlan& plan = *n.pool;
                for (int i = 0; i < plan.out_rows; ++i) {
                    const double* grow = g.row_ptr(i);
                    for (int j = plan.row_ptr[i]; j < plan.row_ptr[i + 1]; ++j) {
                        const double w = plan.weight[j];
                        double* drow = dx.row_ptr(plan.src_row[j]);
                        for (int c = 0; c < g.cols; ++c) drow[c] += w * grow[c];
                    }
                }
                break;
            }
            case Op::RowSum: {
                Tensor& dx = grad_buf(n.a);
                for (int r = 0; r < dx.rows; ++r) {
                    double* drow = dx.row_ptr(r);
                    const double gv = g.data[r];
                    for (int c = 0; c < dx.cols; ++c) drow[c] += gv;
                }
                break;
            }
            case Op::SumAll: {
                Tensor& dx = grad_buf(n.a);
                const double gv = g.data[0];
                for (double& t : dx.data) t += gv;
                break;
            }
            case Op::SegmentSumRows: {
                Tensor& dx = grad_buf(n.a);
                for (int r = 0; r < dx.rows; ++r) {
                    const double* grow = g.row_ptr(r / n.i0);
                    double* drow = dx.row_ptr(r);
                    for (int c = 0; c < dx.cols; ++c) drow[c] += grow[c];
                }
                break;
            }
            case Op::DropSegmentTail: {
                Tensor& dx = grad_buf(n.a);
                const int groups = g.rows / n.i1;
                for (int grp = 0; grp < groups; ++grp)
                    for (int r = 0; r < n.i1; ++r) {
                        const double* grow = g.row_ptr(grp * n.i1 + r);
                        double* drow = dx.row_ptr(grp * n.i0 + r);
                        for (int c = 0; c < g.cols; ++c) drow[c] += grow[c];
                    }
                break;
            }
            case Op::NormalizeRows: {
                const Tensor& X = nodes_[n.a].val;
                Tensor& dx = grad_buf(n.a);
                for (int r = 0; r < X.rows; ++r) {
                    const double* xrow = X.row_ptr(r);
                    const double* grow = g.row_ptr(r);
                    double sq = 0, gdotx = 0;
                    for (int c = 0; c < X.cols; ++c) {
                        sq += xrow[c] * xrow[c];
                        gdotx += grow[c] * xrow[c];
                    }
                    const double norm = std::sqrt(sq + n.c0 * n.c0);
                    const double n3 = norm * norm * norm;
                    double* drow = dx.row_ptr(r);
                    for (int c = 0; c < X.cols; ++c)
                        drow[c] += grow[c] / norm - xrow[c] * gdotx / n3;
                }
                break;
            }
            case Op::SoftmaxRows: {
                Tensor& dx = grad_buf(n.a);
                for (int r = 0; r < g.rows; ++r) {
                    const double* y = n.val.row_ptr(r);
                    const double* grow = g.row_ptr(r);
                    double dot = 0;
                    for (int c = 0; c < g.cols; ++c) dot += grow[c] * y[c];
                    double* drow = dx.row_ptr(r);
                    for (int c = 0; c < g.cols; ++c) drow[c] += y[c] * (grow[c] - dot);
                }
                break;
            }
        }
    }
}

}  // namespace geff
