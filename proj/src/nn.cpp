#include "geff/nn.hpp"

#include <cmath>

namespace geff {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::None: return "none";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "none";
}

Activation activation_from_name(const std::string& name) {
    if (name == "none") return Activation::None;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw ParseError("unknown activation: " + name);
}

Mlp Mlp::create(std::vector<int> layer_sizes, Activation output_act, Rng& rng) {
    if (layer_sizes.size() < 2) throw ShapeError("Mlp needs at least two layer sizes");
    Mlp net;
    net.sizes = std::move(layer_sizes);
    net.output = output_act;
    for (std::size_t i = 0; i + 1 < net.sizes.size(); ++i) {
        net.weights.push_back(glorot_uniform(net.sizes[i], net.sizes[i + 1], rng));
        net.biases.push_back(Tensor::zeros(1, net.sizes[i + 1]));
    }
    return net;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

std::vector<Tensor*> Mlp::params() {
    std::vector<Tensor*> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.push_back(&weights[i]);
        out.push_back(&biases[i]);
    }
    return out;
}

std::vector<const Tensor*> Mlp::params() const {
    std::vector<const Tensor*> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.push_back(&weights[i]);
        out.push_back(&biases[i]);
    }
    return out;
}

Value Mlp::forward(Tape& tape, Value x) {
    if (tape.val(x).cols != sizes.front()) throw ShapeError("Mlp::forward: input width mismatch");
    Value h = x;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        h = tape.add_rowvec(tape.matmul(h, tape.param(&weights[i])), tape.param(&biases[i]));
        const bool last = i + 1 == weights.size();
        if (!last) {
            h = tape.relu(h);
        } else if (output == Activation::Relu) {
            h = tape.relu(h);
        } else if (output == Activation::Sigmoid) {
            h = tape.sigmoid(h);
        }
    }
    return h;
}

Tensor Mlp::forward_plain(const Tensor& x) const {
    if (x.cols != sizes.front()) throw ShapeError("Mlp::forward_plain: input width mismatch");
    Tensor h = x;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        Tensor next(h.rows, weights[i].cols);
        next.map().noalias() = h.map() * weights[i].map();
        for (int r = 0; r < next.rows; ++r) {
            double* row = next.row_ptr(r);
            for (int c = 0; c < next.cols; ++c) row[c] += biases[i].data[c];
        }
        const bool last = i + 1 == weights.size();
        const Activation act = last ? output : Activation::Relu;
        if (act == Activation::Relu) {
            for (double& t : next.data) t = t > 0 ? t : 0.0;
        } else if (act == Activation::Sigmoid) {
            for (double& t : next.data) t = 1.0 / (1.0 + std::exp(-t));
        }
        h = std::move(next);
    }
    return h;
}

void AdamState::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size()) throw ShapeError("adam: param/grad count mismatch");
    for (const Tensor* g : grads)
        if (!g->all_finite()) throw NonFiniteError("non-finite gradient");
    if (m.empty()) {
        for (Tensor* p : params) {
            m.push_back(Tensor::zeros(p->rows, p->cols));
            v.push_back(Tensor::zeros(p->rows, p->cols));
        }
    }
    if (m.size() != params.size()) throw ShapeError("adam: state/param count mismatch");
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!p.same_shape(g) || !p.same_shape(m[i]))
            throw ShapeError("adam: gradient shape mismatch");
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[i].data[k] = beta1 * m[i].data[k] + (1.0 - beta1) * g.data[k];
            v[i].data[k] = beta2 * v[i].data[k] + (1.0 - beta2) * g.data[k] * g.data[k];
            const double mhat = m[i].data[k] / bc1;
            const double vhat = v[i].data[k] / bc2;
            p.data[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void append_params(const std::vector<const Tensor*>& params, std::vector<double>& out) {
    for (const Tensor* p : params) out.insert(out.end(), p->data.begin(), p->data.end());
}

std::size_t read_params(const std::vector<Tensor*>& params, const std::vector<double>& in,
                        std::size_t offset) {
    for (Tensor* p : params) {
        if (offset + p->size() > in.size()) throw ShapeError("checkpoint: not enough values");
        std::copy(in.begin() + offset, in.begin() + offset + p->size(), p->data.begin());
        offset += p->size();
    }
    return offset;
}

}  // namespace geff
