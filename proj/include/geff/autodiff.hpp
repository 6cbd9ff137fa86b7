#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "geff/tensor.hpp"

namespace geff {

// Handle to a node on a Tape.
struct Value {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Weighted row-combination plan: out[i] = sum_j weight[j] * x[src_row[j]] for
// j in [row_ptr[i], row_ptr[i+1]). Used to pool per-neighbor rows per query.
struct PoolPlan {
    int out_rows = 0;
    std::vector<int> row_ptr;
    std::vector<int> src_row;
    std::vector<double> weight;
};

// Reverse-mode tape over dense tensors. Forward values are computed eagerly
// when ops are recorded; backward() walks nodes in reverse creation order, so
// the graph is acyclic by construction and every node is visited exactly once.
// Single-threaded per tape; independent tapes may run in parallel.
class Tape {
public:
    Value constant(Tensor t);
    // Parameter leaf. Calling param() twice with the same pointer on one tape
    // returns the same node, so each parameter accumulates one gradient.
    Value param(Tensor* storage);

    // Elementwise; operands must share shape, or either may be 1x1 (broadcast).
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value div(Value a, Value b);

    Value matmul(Value a, Value b);
    Value add_rowvec(Value x, Value bias);  // bias: 1xN
    Value mul_colvec(Value x, Value v);     // v: Mx1 scaling rows of x

    Value relu(Value x);
    Value sigmoid(Value x);
    Value exp(Value x);
    Value sqrt(Value x);
    Value square(Value x);
    Value abs(Value x);
    Value neg(Value x);
    Value scale(Value x, double c);
    Value add_const(Value x, double c);

    Value concat_cols(Value a, Value b);
    Value slice_cols(Value x, int c0, int c1);  // [c0, c1)
    Value reshape(Value x, int r, int c);
    Value gather_rows(Value x, std::vector<int> indices);
    Value pool_rows(Value x, std::shared_ptr<const PoolPlan> plan);
    Value row_sum(Value x);   // MxN -> Mx1
    Value sum_all(Value x);   // -> 1x1
    // Sums each run of `segment` consecutive rows: (S*segment)xN -> SxN.
    Value segment_sum_rows(Value x, int segment);
    // Keeps the first `keep` rows of each run of `segment_in` rows.
    Value drop_segment_tail(Value x, int segment_in, int keep);
    Value normalize_rows(Value x, double eps = 1e-12);
    Value softmax_rows(Value x);

    const Tensor& val(Value v) const;
    // Gradient of the last backward() target w.r.t. node v (zeros if unused).
    const Tensor& grad(Value v);
    Tensor* param_storage(Value v) const;

    // Reverse pass from a 1x1 node. Throws NotScalarError otherwise.
    void backward(Value scalar_output);

    // Nodes holding gradients for every distinct param() leaf.
    std::vector<Value> param_nodes() const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        Constant, Param, Add, Sub, Mul, Div, MatMul, AddRowVec, MulColVec,
        Relu, Sigmoid, Exp, Sqrt, Square, Abs, Neg, Scale, AddConst,
        ConcatCols, SliceCols, Reshape, GatherRows, PoolRows, RowSum, SumAll,
        SegmentSumRows, DropSegmentTail, NormalizeRows, SoftmaxRows,
    };

    struct Node {
        Op op;
        int a = -1, b = -1;
        Tensor val;
        Tensor grad;
        bool grad_alloc = false;
        int i0 = 0, i1 = 0;
        double c0 = 0.0;
        std::vector<int> indices;
        std::shared_ptr<const PoolPlan> pool;
        Tensor* storage = nullptr;
    };

    Value push(Node n);
    Tensor& grad_buf(int id);
    const Tensor& v(Value x) const;
    static void check_same_or_scalar(const Tensor& a, const Tensor& b, const char* op);

    std::vector<Node> nodes_;
    std::unordered_map<const Tensor*, int> param_cache_;
    Tensor empty_;
};

}  // namespace geff
