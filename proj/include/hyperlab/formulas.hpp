#pragma once

// Closed-form dimension values and bounds. Templated so the same expressions run in
// double and in exact rational arithmetic.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "hyperlab/error.hpp"

namespace hyperlab::formulas {

template <class T>
void require(bool ok, const std::string& id, const std::string& hypothesis) {
    if (!ok) usage_error(id + ": parameter violates hypothesis " + hypothesis);
}

// Shrinking target, totally geodesic N of dimension s in a closed hyperbolic n-manifold.
template <class T>
T shrinking_constant(T n, T s, T tau) {
    require<T>(n >= T(2), "thm1.1", "n >= 2");
    require<T>(s >= T(0) && s <= n - T(1), "thm1.1", "0 <= s <= n-1");
    require<T>(tau >= T(0), "thm1.1", "tau >= 0");
    return (n - T(1)) * (T(1) + tau * s / (n - T(1))) / (T(1) + tau);
}

// Spiral trap, totally geodesic N of dimension s >= 1.
template <class T>
T spiral_constant(T n, T s, T tau) {
    require<T>(n >= T(2), "thm1.2", "n >= 2");
    require<T>(s >= T(1) && s <= n - T(1), "thm1.2", "1 <= s <= n-1");
    require<T>(tau >= T(0), "thm1.2", "tau >= 0");
    return (n - T(1)) * (T(1) + tau * (s - T(1)) / (n - T(1))) / (T(1) + tau);
}

// Spiral trap in pinched curvature: (v_G + tau v_N) / (1 + tau).
template <class T>
T spiral_general(T v_gamma, T v_n, T tau) {
    require<T>(v_gamma > T(0), "spiral", "v_Gamma > 0");
    require<T>(v_n >= T(0) && v_n <= v_gamma, "spiral", "0 <= v_N <= v_Gamma");
    require<T>(tau >= T(0), "spiral", "tau >= 0");
    return (v_gamma + tau * v_n) / (T(1) + tau);
}

template <class T>
struct Pair {
    T lower{};
    T upper{};
};

// Shrinking target in pinched curvature -a^2 <= k <= -1.
template <class T>
Pair<T> shrinking_general(T v_gamma, T n, T s, T tau, T a) {
    require<T>(v_gamma > T(0), "shrinking", "v_Gamma > 0");
    require<T>(s >= T(0) && s < n, "shrinking", "0 <= s < n");
    require<T>(tau >= T(0), "shrinking", "tau >= 0");
    require<T>(a >= T(1), "shrinking", "a >= 1");
    return {(v_gamma + tau * s) / (T(1) + tau), (v_gamma + tau * s) / (T(1) + tau / a)};
}

// Large intersection: inf over i of the per-target pair, dims[i] = dim N_i.
template <class T>
Pair<T> large_intersection(T n, const std::vector<T>& taus, const std::vector<T>& dims, T a) {
    require<T>(n >= T(2), "thm1.4", "n >= 2");
    require<T>(a >= T(1), "thm1.4", "a >= 1");
    require<T>(!taus.empty() && taus.size() == dims.size(), "thm1.4", "one dimension per tau_i");
    Pair<T> out;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        require<T>(taus[i] > T(0), "thm1.4", "tau_i > 0");
        require<T>(dims[i] >= T(0) && dims[i] <= n - T(1), "thm1.4", "0 <= dim N_i <= n-1");
        const T num = (n - T(1)) * (T(1) + taus[i] * dims[i] / (n - T(1)));
        const T lo = num / (T(1) + taus[i]), hi = num / (T(1) + taus[i] / a);
        if (i == 0 || lo < out.lower) out.lower = lo;
        if (i == 0 || hi < out.upper) out.upper = hi;
    }
    return out;
}

// Large-intersection spiraling lower bound: inf_i min{(v + tau_i v_Ni)/(1+tau_i), (v + tau_i dim N'_i)/(1+tau_i)}.
template <class T>
T lip_spiral(T v_m, const std::vector<T>& taus, const std::vector<T>& v_ns, const std::vector<T>& dims_prime) {
    require<T>(v_m > T(0), "lip-spiral", "v_M > 0");
    require<T>(!taus.empty() && taus.size() == v_ns.size() && taus.size() == dims_prime.size(), "lip-spiral",
               "one v_N and one dim N' per tau_i");
    T best{};
    for (std::size_t i = 0; i < taus.size(); ++i) {
        require<T>(taus[i] > T(0), "lip-spiral", "tau_i > 0");
        require<T>(v_ns[i] >= T(0) && dims_prime[i] >= T(0), "lip-spiral", "v_N, dim N' >= 0");
        const T x = std::min((v_m + taus[i] * v_ns[i]) / (T(1) + taus[i]),
                             (v_m + taus[i] * dims_prime[i]) / (T(1) + taus[i]));
        if (i == 0 || x < best) best = x;
    }
    return best;
}

template <class T>
T cusp_tree(T v_x, T tau) {
    require<T>(v_x > T(0), "cusp-tree", "v_X > 0");
    require<T>(tau > T(0), "cusp-tree", "tau > 0");
    return v_x / (T(1) + tau);
}

template <class T>
T bianchi(T tau) {
    require<T>(tau >= T(1), "bianchi", "tau >= 1");
    return T(2) / tau;
}

struct Params {
    double n = 2.0;
    double s = 0.0;
    double tau = 1.0;
    double a = 1.0;
    double v_gamma = 1.0;
    double v_n = 0.0;
    double v_x = 1.0;
    std::vector<double> taus;
    std::vector<double> dims;
    std::vector<double> v_ns;
    std::vector<double> dims_prime;
};

struct Value {
    double lower = 0.0;
    double upper = 0.0;
    bool pair = false;

    double value() const { return lower; }
};

inline const std::vector<std::string>& ids() {
    static const std::vector<std::string> v{"thm1.1", "thm1.2",    "thm1.4",    "spiral",
                                            "shrinking", "lip-spiral", "cusp-tree", "bianchi"};
    return v;
}

inline Value evaluate(const std::string& id, const Params& p) {
    auto single = [](double x) { return Value{x, x, false}; };
    if (id == "thm1.1") return single(shrinking_constant(p.n, p.s, p.tau));
    if (id == "thm1.2") return single(spiral_constant(p.n, p.s, p.tau));
    if (id == "spiral") return single(spiral_general(p.v_gamma, p.v_n, p.tau));
    if (id == "cusp-tree") return single(cusp_tree(p.v_x, p.tau));
    if (id == "bianchi") return single(bianchi(p.tau));
    if (id == "shrinking") {
        const auto b = shrinking_general(p.v_gamma, p.n, p.s, p.tau, p.a);
        return {b.lower, b.upper, true};
    }
    if (id == "thm1.4") {
        const auto taus = p.taus.empty() ? std::vector<double>{p.tau} : p.taus;
        const auto dims = p.dims.empty() ? std::vector<double>(taus.size(), p.s) : p.dims;
        const auto b = large_intersection(p.n, taus, dims, p.a);
        return {b.lower, b.upper, true};
    }
    if (id == "lip-spiral") {
        const auto taus = p.taus.empty() ? std::vector<double>{p.tau} : p.taus;
        const auto v_ns = p.v_ns.empty() ? std::vector<double>(taus.size(), p.v_n) : p.v_ns;
        const auto dp = p.dims_prime.empty() ? std::vector<double>(taus.size(), p.s) : p.dims_prime;
        const double x = lip_spiral(p.v_gamma, taus, v_ns, dp);
        return {x, x, false};
    }
    usage_error("unknown theorem id '" + id + "'");
}

}  // namespace hyperlab::formulas
