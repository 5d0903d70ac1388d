#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "iflow/blas.hpp"
#include "iflow/common.hpp"
#include "iflow/tensor.hpp"

namespace iflow {

// Define-by-run reverse-mode graph. Nodes are created in topological order, so
// the backward sweep is a reverse walk over the node vector. The scalar type is
// a template parameter: float for training, double for oracles and gradient
// checks.
template <class T>
class GraphT {
public:
    int input(TensorT<T> v) { return push(Op::Input, std::move(v)); }

    int param(const std::string& name, const TensorT<T>& v) {
        if (param_ids_.count(name)) config_error("duplicate graph parameter '" + name + "'");
        const int id = push(Op::Param, v);
        nodes_[id].name = name;
        param_ids_[name] = id;
        return id;
    }

    int add(int a, int b) {
        require_same(a, b, "add");
        TensorT<T> out(shape(a));
        const auto &va = val(a), &vb = val(b);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
        return push(Op::Add, std::move(out), a, b);
    }

    int sub(int a, int b) {
        require_same(a, b, "sub");
        TensorT<T> out(shape(a));
        const auto &va = val(a), &vb = val(b);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
        return push(Op::Sub, std::move(out), a, b);
    }

    int mul(int a, int b) {
        require_same(a, b, "mul");
        TensorT<T> out(shape(a));
        const auto &va = val(a), &vb = val(b);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
        return push(Op::Mul, std::move(out), a, b);
    }

    int scale(int a, T c) {
        TensorT<T> out(shape(a));
        const auto& va = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * c;
        const int id = push(Op::Scale, std::move(out), a);
        nodes_[id].c = c;
        return id;
    }

    int add_scalar(int a, T c) {
        TensorT<T> out(shape(a));
        const auto& va = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + c;
        return push(Op::AddScalar, std::move(out), a);
    }

    // (B,K) x (K,N) -> (B,N)
    int matmul(int a, int b) {
        const auto &sa = shape(a), &sb = shape(b);
        if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
            config_error("matmul shape mismatch: " + val(a).shape_str() + " x " +
                         val(b).shape_str());
        TensorT<T> out({sa[0], sb[1]});
        detail::gemm(false, false, int(sa[0]), int(sb[1]), int(sa[1]), T(1), val(a).data(),
                     int(sa[1]), val(b).data(), int(sb[1]), T(0), out.data(), int(sb[1]));
        return push(Op::Matmul, std::move(out), a, b);
    }

    // (B,D) + (D), broadcast over rows
    int add_bias(int a, int b) {
        const auto &sa = shape(a), &sb = shape(b);
        if (sa.size() != 2 || sb.size() != 1 || sa[1] != sb[0])
            config_error("add_bias shape mismatch: " + val(a).shape_str() + " + " +
                         val(b).shape_str());
        TensorT<T> out(sa);
        const auto &va = val(a), &vb = val(b);
        for (std::size_t r = 0; r < sa[0]; ++r)
            for (std::size_t c = 0; c < sa[1]; ++c) out.at2(r, c) = va.at2(r, c) + vb[c];
        return push(Op::AddBias, std::move(out), a, b);
    }

    int silu(int a) { return unary(Op::Silu, a, [](T x) { return x / (T(1) + std::exp(-x)); }); }

    int relu(int a) {
        return unary(Op::Relu, a, [](T x) { return x > T(0) ? x : T(0); });
    }

    int sin_of(int a) { return unary(Op::Sin, a, [](T x) { return std::sin(x); }); }
    int cos_of(int a) { return unary(Op::Cos, a, [](T x) { return std::cos(x); }); }
    int sqrt_of(int a) { return unary(Op::Sqrt, a, [](T x) { return std::sqrt(x); }); }

    // column-wise concat of two 2-D tensors with equal row counts
    int concat_cols(int a, int b) {
        const auto &sa = shape(a), &sb = shape(b);
        if (sa.size() != 2 || sb.size() != 2 || sa[0] != sb[0])
            config_error("concat shape mismatch: " + val(a).shape_str() + " | " +
                         val(b).shape_str());
        TensorT<T> out({sa[0], sa[1] + sb[1]});
        const auto &va = val(a), &vb = val(b);
        for (std::size_t r = 0; r < sa[0]; ++r) {
            for (std::size_t c = 0; c < sa[1]; ++c) out.at2(r, c) = va.at2(r, c);
            for (std::size_t c = 0; c < sb[1]; ++c) out.at2(r, sa[1] + c) = vb.at2(r, c);
        }
        return push(Op::ConcatCols, std::move(out), a, b);
    }

    // mean over all elements, 64-bit accumulation
    int mean_all(int a) {
        const auto& va = val(a);
        double acc = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) acc += double(va[i]);
        TensorT<T> out({1});
        out[0] = T(acc / double(va.size()));
        return push(Op::MeanAll, std::move(out), a);
    }

    // elementwise (a-b)^2
    int sqdiff(int a, int b) {
        require_same(a, b, "sqdiff");
        TensorT<T> out(shape(a));
        const auto &va = val(a), &vb = val(b);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const T d = va[i] - vb[i];
            out[i] = d * d;
        }
        return push(Op::SqDiff, std::move(out), a, b);
    }

    // identity value, blocks the backward sweep
    int stop_gradient(int a) { return push(Op::Stop, val(a), a); }

    const TensorT<T>& value(int id) const { return nodes_[std::size_t(id)].value; }

    double scalar(int id) const {
        if (value(id).size() != 1)
            config_error("expected a scalar node, got shape " + value(id).shape_str());
        return double(value(id)[0]);
    }

    // Reverse sweep from a scalar loss. Returns one gradient tensor per named
    // parameter; parameters the loss never touched get zeros.
    std::map<std::string, TensorT<T>> grad(int loss) {
        if (value(loss).size() != 1)
            config_error("grad needs a scalar loss, got shape " + value(loss).shape_str());
        std::vector<TensorT<T>> grads(nodes_.size());
        std::vector<char> touched(nodes_.size(), 0);
        grads[std::size_t(loss)] = TensorT<T>({1}, T(1));
        touched[std::size_t(loss)] = 1;

        auto reach = [&](int id) -> TensorT<T>& {
            auto& g = grads[std::size_t(id)];
            if (!touched[std::size_t(id)]) {
                g = TensorT<T>(shape(id));
                touched[std::size_t(id)] = 1;
            }
            return g;
        };
        // Leaves and stopped subtrees receive no upstream pushes.
        auto wants = [&](int id) {
            const Op op = nodes_[std::size_t(id)].op;
            return op != Op::Input && op != Op::Stop;
        };

        for (int i = loss; i >= 0; --i) {
            if (!touched[std::size_t(i)]) continue;
            const Node& n = nodes_[std::size_t(i)];
            const TensorT<T>& g = grads[std::size_t(i)];
            switch (n.op) {
            case Op::Input:
            case Op::Param:
            case Op::Stop:
                break;
            case Op::Add: {
                if (wants(n.a)) accumulate(reach(n.a), g);
                if (wants(n.b)) accumulate(reach(n.b), g);
                break;
            }
            case Op::Sub: {
                if (wants(n.a)) accumulate(reach(n.a), g);
                if (wants(n.b)) {
                    auto& gb = reach(n.b);
                    for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
                }
                break;
            }
            case Op::Mul: {
                const auto &va = val(n.a), &vb = val(n.b);
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * vb[k];
                }
                if (wants(n.b)) {
                    auto& gb = reach(n.b);
                    for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * va[k];
                }
                break;
            }
            case Op::Scale: {
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * n.c;
                }
                break;
            }
            case Op::AddScalar: {
                if (wants(n.a)) accumulate(reach(n.a), g);
                break;
            }
            case Op::Matmul: {
                const auto &sa = shape(n.a), &sb = shape(n.b);
                const int B = int(sa[0]), K = int(sa[1]), N = int(sb[1]);
                if (wants(n.a))
                    detail::gemm(false, true, B, K, N, T(1), g.data(), N, val(n.b).data(), N, T(1),
                                 reach(n.a).data(), K);
                if (wants(n.b))
                    detail::gemm(true, false, K, N, B, T(1), val(n.a).data(), K, g.data(), N, T(1),
                                 reach(n.b).data(), N);
                break;
            }
            case Op::AddBias: {
                if (wants(n.a)) accumulate(reach(n.a), g);
                if (wants(n.b)) {
                    auto& gb = reach(n.b);
                    const auto& sa = shape(n.a);
                    for (std::size_t c = 0; c < sa[1]; ++c) {
                        double acc = 0.0;
                        for (std::size_t r = 0; r < sa[0]; ++r) acc += double(g.at2(r, c));
                        gb[c] += T(acc);
                    }
                }
                break;
            }
            case Op::Silu: {
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    const auto& va = val(n.a);
                    for (std::size_t k = 0; k < g.size(); ++k) {
                        const T s = T(1) / (T(1) + std::exp(-va[k]));
                        ga[k] += g[k] * s * (T(1) + va[k] * (T(1) - s));
                    }
                }
                break;
            }
            case Op::Relu: {
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    const auto& va = val(n.a);
                    for (std::size_t k = 0; k < g.size(); ++k)
                        if (va[k] > T(0)) ga[k] += g[k];
                }
                break;
            }
            case Op::Sin: {
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    const auto& va = val(n.a);
                    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * std::cos(va[k]);
                }
                break;
            }
            case Op::Cos: {
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    const auto& va = val(n.a);
                    for (std::size_t k = 0; k < g.size(); ++k) ga[k] -= g[k] * std::sin(va[k]);
                }
                break;
            }
            case Op::Sqrt: {
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    const auto& vo = n.value;
                    for (std::size_t k = 0; k < g.size(); ++k)
                        ga[k] += g[k] / (T(2) * vo[k]);
                }
                break;
            }
            case Op::ConcatCols: {
                const auto &sa = shape(n.a), &sb = shape(n.b);
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    for (std::size_t r = 0; r < sa[0]; ++r)
                        for (std::size_t c = 0; c < sa[1]; ++c) ga.at2(r, c) += g.at2(r, c);
                }
                if (wants(n.b)) {
                    auto& gb = reach(n.b);
                    for (std::size_t r = 0; r < sb[0]; ++r)
                        for (std::size_t c = 0; c < sb[1]; ++c)
                            gb.at2(r, c) += g.at2(r, sa[1] + c);
                }
                break;
            }
            case Op::MeanAll: {
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    const T w = g[0] / T(ga.size());
                    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += w;
                }
                break;
            }
            case Op::SqDiff: {
                const auto &va = val(n.a), &vb = val(n.b);
                if (wants(n.a)) {
                    auto& ga = reach(n.a);
                    for (std::size_t k = 0; k < g.size(); ++k)
                        ga[k] += g[k] * T(2) * (va[k] - vb[k]);
                }
                if (wants(n.b)) {
                    auto& gb = reach(n.b);
                    for (std::size_t k = 0; k < g.size(); ++k)
                        gb[k] -= g[k] * T(2) * (va[k] - vb[k]);
                }
                break;
            }
            }
        }

        std::map<std::string, TensorT<T>> out;
        for (const auto& [name, id] : param_ids_) {
            if (touched[std::size_t(id)])
                out.emplace(name, std::move(grads[std::size_t(id)]));
            else
                out.emplace(name, TensorT<T>(shape(id)));
        }
        return out;
    }

private:
    enum class Op {
        Input,
        Param,
        Add,
        Sub,
        Mul,
        Scale,
        AddScalar,
        Matmul,
        AddBias,
        Silu,
        Relu,
        Sin,
        Cos,
        Sqrt,
        ConcatCols,
        MeanAll,
        SqDiff,
        Stop
    };

    struct Node {
        Op op;
        TensorT<T> value;
        int a = -1;
        int b = -1;
        T c{};
        std::string name;
    };

    int push(Op op, TensorT<T> v, int a = -1, int b = -1) {
        nodes_.push_back(Node{op, std::move(v), a, b, T{}, {}});
        return int(nodes_.size()) - 1;
    }

    template <class F>
    int unary(Op op, int a, F&& f) {
        TensorT<T> out(shape(a));
        const auto& va = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(va[i]);
        return push(op, std::move(out), a);
    }

    const TensorT<T>& val(int id) const { return nodes_[std::size_t(id)].value; }
    const std::vector<std::size_t>& shape(int id) const { return val(id).shape(); }

    void require_same(int a, int b, const char* what) const {
        if (!val(a).same_shape(val(b)))
            config_error(std::string(what) + " shape mismatch: " + val(a).shape_str() + " vs " +
                         val(b).shape_str());
    }

    static void accumulate(TensorT<T>& dst, const TensorT<T>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }

    std::vector<Node> nodes_;
    std::map<std::string, int> param_ids_;
};

using Graph = GraphT<float>;

// Named parameter tensors plus gradient accumulators.
class ParamStore {
public:
    void add(const std::string& name, Tensor t) {
        if (params_.count(name)) config_error("duplicate parameter '" + name + "'");
        grads_.emplace(name, Tensor(t.shape()));
        params_.emplace(name, std::move(t));
    }

    bool has(const std::string& name) const { return params_.count(name) != 0; }

    Tensor& get(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) config_error("unknown parameter '" + name + "'");
        return it->second;
    }
    const Tensor& get(const std::string& name) const {
        return const_cast<ParamStore*>(this)->get(name);
    }

    Tensor& grad(const std::string& name) {
        auto it = grads_.find(name);
        if (it == grads_.end()) config_error("unknown parameter '" + name + "'");
        return it->second;
    }

    void zero_grads() {
        for (auto& [name, g] : grads_)
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.0f;
    }

    void accumulate(const std::map<std::string, Tensor>& grads) {
        for (const auto& [name, g] : grads) {
            Tensor& dst = grad(name);
            if (!dst.same_shape(g))
                config_error("gradient shape mismatch for '" + name + "': " + dst.shape_str() +
                             " vs " + g.shape_str());
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        }
    }

    const std::map<std::string, Tensor>& params() const { return params_; }
    std::map<std::string, Tensor>& params() { return params_; }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& [name, t] : params_) n += t.size();
        return n;
    }

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> grads_;
};

// Central-difference check of the engine's gradient for a scalar-valued map.
// Everything runs in double: at h=1e-3 a float32 evaluation path would drown
// the comparison in rounding noise. f gets a fresh graph and the node id of
// the "x" parameter, and must return the loss node id.
template <class F>
double check_gradients(F&& f, const TensorT<double>& x, double h = 1e-3) {
    GraphT<double> g;
    const int xid = g.param("x", x);
    const int loss = f(g, xid);
    const double fx = g.scalar(loss);
    if (!std::isfinite(fx)) numeric_error("check_gradients: loss is not finite at x");
    TensorT<double> analytic = g.grad(loss).at("x");

    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto eval = [&](double xi) {
            TensorT<double> xp = x;
            xp[i] = xi;
            GraphT<double> gp;
            const int id = gp.param("x", xp);
            const double v = gp.scalar(f(gp, id));
            if (!std::isfinite(v)) numeric_error("check_gradients: loss not finite at probe");
            return v;
        };
        const double diff = (eval(x[i] + h) - eval(x[i] - h)) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(diff), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - diff) / denom);
    }
    return worst;
}

} // namespace iflow
