#pragma once

// Truncated multivariate Taylor arithmetic in the three variables (t, x, y).
//
// A Jet<N> carries every partial derivative of total order <= N at a single
// point. Arithmetic and elementary functions propagate them exactly (no
// finite differences), so identities between derivatives of composite
// expressions hold to rounding.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace carleman {

inline constexpr int kJetVars = 3;

namespace detail {

constexpr std::size_t jet_size(int order) {
    std::size_t n = 0;
    for (int a = 0; a <= order; ++a)
        for (int b = 0; a + b <= order; ++b)
            for (int c = 0; a + b + c <= order; ++c) ++n;
    return n;
}

template <int N>
struct JetLayout {
    static constexpr std::size_t size = jet_size(N);
    std::array<std::array<int, kJetVars>, size> exps{};

    constexpr JetLayout() {
        std::size_t k = 0;
        // graded ordering: total degree first
        for (int deg = 0; deg <= N; ++deg)
            for (int a = deg; a >= 0; --a)
                for (int b = deg - a; b >= 0; --b) {
                    exps[k] = {a, b, deg - a - b};
                    ++k;
                }
    }

    constexpr int index_of(int a, int b, int c) const {
        for (std::size_t k = 0; k < size; ++k)
            if (exps[k][0] == a && exps[k][1] == b && exps[k][2] == c) return static_cast<int>(k);
        return -1;
    }
};

template <int N>
inline constexpr JetLayout<N> layout{};

template <int N>
struct ProductTable {
    static constexpr std::size_t size = JetLayout<N>::size;
    // product[i][j] = index of monomial i*j, or -1 when it is truncated
    std::array<std::array<int, size>, size> product{};

    constexpr ProductTable() {
        const auto& L = layout<N>;
        for (std::size_t i = 0; i < size; ++i)
            for (std::size_t j = 0; j < size; ++j) {
                int a = L.exps[i][0] + L.exps[j][0];
                int b = L.exps[i][1] + L.exps[j][1];
                int c = L.exps[i][2] + L.exps[j][2];
                product[i][j] = (a + b + c <= N) ? L.index_of(a, b, c) : -1;
            }
    }
};

template <int N>
inline constexpr ProductTable<N> products{};

constexpr double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

} // namespace detail

/// Taylor jet of order N. Coefficient k multiplies dt^a dx^b dy^c / (a! b! c!).
template <int N>
class Jet {
public:
    static_assert(N >= 0, "jet order must be nonnegative");
    static constexpr int order = N;
    static constexpr std::size_t size = detail::JetLayout<N>::size;

    constexpr Jet() = default;
    constexpr Jet(double value) { c_[0] = value; } // NOLINT: implicit by design of the arithmetic

    /// Independent variable `var` (0 = t, 1 = x, 2 = y) located at `value`.
    static Jet variable(int var, double value) {
        Jet j(value);
        if constexpr (N >= 1) {
            int e[kJetVars] = {0, 0, 0};
            e[var] = 1;
            j.c_[detail::layout<N>.index_of(e[0], e[1], e[2])] = 1.0;
        }
        return j;
    }

    /// Truncate a higher-order jet.
    template <int M>
        requires(M > N)
    explicit Jet(const Jet<M>& other) {
        for (std::size_t k = 0; k < size; ++k) {
            const auto& e = detail::layout<N>.exps[k];
            c_[k] = other.coeff(detail::layout<M>.index_of(e[0], e[1], e[2]));
        }
    }

    double value() const { return c_[0]; }
    double coeff(int k) const { return c_[static_cast<std::size_t>(k)]; }
    double& coeff_ref(int k) { return c_[static_cast<std::size_t>(k)]; }

    /// Partial derivative d^(a+b+c) / dt^a dx^b dy^c at the expansion point.
    double derivative(int a, int b, int c) const {
        int k = detail::layout<N>.index_of(a, b, c);
        if (k < 0) return 0.0;
        return c_[static_cast<std::size_t>(k)] * detail::factorial(a) * detail::factorial(b) *
               detail::factorial(c);
    }

    Jet& operator+=(const Jet& o) {
        for (std::size_t k = 0; k < size; ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (std::size_t k = 0; k < size; ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator*=(double s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    Jet& operator*=(const Jet& o) {
        *this = mul(*this, o);
        return *this;
    }

    Jet operator-() const {
        Jet r = *this;
        for (auto& v : r.c_) v = -v;
        return r;
    }

    static Jet mul(const Jet& a, const Jet& b) {
        Jet r;
        const auto& P = detail::products<N>.product;
        for (std::size_t i = 0; i < size; ++i) {
            if (a.c_[i] == 0.0) continue;
            for (std::size_t j = 0; j < size; ++j) {
                int k = P[i][j];
                if (k >= 0) r.c_[static_cast<std::size_t>(k)] += a.c_[i] * b.c_[j];
            }
        }
        return r;
    }

    /// g(a0 + h) = sum_k g^(k)(a0)/k! h^k, given the derivative values.
    Jet compose(const std::array<double, N + 1>& derivs) const {
        Jet h = *this;
        h.c_[0] = 0.0;
        Jet r(derivs[0]);
        Jet hk(1.0);
        for (int k = 1; k <= N; ++k) {
            hk = mul(hk, h);
            Jet term = hk;
            term *= derivs[static_cast<std::size_t>(k)] / detail::factorial(k);
            r += term;
        }
        return r;
    }

private:
    std::array<double, size> c_{};
};

template <int N, int M>
using JetMin = Jet<(N < M ? N : M)>;

template <int N, int M>
JetMin<N, M> operator+(const Jet<N>& a, const Jet<M>& b) {
    using R = JetMin<N, M>;
    R r = R(a);
    r += R(b);
    return r;
}
template <int N>
Jet<N> operator+(const Jet<N>& a, const Jet<N>& b) {
    Jet<N> r = a;
    r += b;
    return r;
}
template <int N, int M>
JetMin<N, M> operator-(const Jet<N>& a, const Jet<M>& b) {
    using R = JetMin<N, M>;
    R r = R(a);
    r -= R(b);
    return r;
}
template <int N>
Jet<N> operator-(const Jet<N>& a, const Jet<N>& b) {
    Jet<N> r = a;
    r -= b;
    return r;
}
template <int N, int M>
JetMin<N, M> operator*(const Jet<N>& a, const Jet<M>& b) {
    using R = JetMin<N, M>;
    return R::mul(R(a), R(b));
}
template <int N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
    return Jet<N>::mul(a, b);
}

template <int N> Jet<N> operator+(const Jet<N>& a, double s) { return a + Jet<N>(s); }
template <int N> Jet<N> operator+(double s, const Jet<N>& a) { return a + Jet<N>(s); }
template <int N> Jet<N> operator-(const Jet<N>& a, double s) { return a - Jet<N>(s); }
template <int N> Jet<N> operator-(double s, const Jet<N>& a) { return Jet<N>(s) - a; }
template <int N> Jet<N> operator*(const Jet<N>& a, double s) { Jet<N> r = a; r *= s; return r; }
template <int N> Jet<N> operator*(double s, const Jet<N>& a) { Jet<N> r = a; r *= s; return r; }

template <int N>
Jet<N> inverse(const Jet<N>& a) {
    std::array<double, N + 1> d{};
    double a0 = a.value();
    double p = 1.0 / a0;
    for (int k = 0; k <= N; ++k) {
        d[static_cast<std::size_t>(k)] = p;
        p *= -(k + 1) / a0;
    }
    return a.compose(d);
}

template <int N, int M>
JetMin<N, M> operator/(const Jet<N>& a, const Jet<M>& b) {
    using R = JetMin<N, M>;
    return R(a) * inverse(R(b));
}
template <int N>
Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
    return a * inverse(b);
}
template <int N> Jet<N> operator/(const Jet<N>& a, double s) { return a * (1.0 / s); }
template <int N> Jet<N> operator/(double s, const Jet<N>& a) { return s * inverse(a); }

template <int N>
Jet<N> exp(const Jet<N>& a) {
    std::array<double, N + 1> d{};
    d.fill(std::exp(a.value()));
    return a.compose(d);
}

template <int N>
Jet<N> log(const Jet<N>& a) {
    std::array<double, N + 1> d{};
    double a0 = a.value();
    d[0] = std::log(a0);
    double p = 1.0 / a0;
    for (int k = 1; k <= N; ++k) {
        d[static_cast<std::size_t>(k)] = p;
        p *= -k / a0;
    }
    return a.compose(d);
}

template <int N>
Jet<N> sin(const Jet<N>& a) {
    std::array<double, N + 1> d{};
    double s = std::sin(a.value()), c = std::cos(a.value());
    const double cyc[4] = {s, c, -s, -c};
    for (int k = 0; k <= N; ++k) d[static_cast<std::size_t>(k)] = cyc[k % 4];
    return a.compose(d);
}

template <int N>
Jet<N> cos(const Jet<N>& a) {
    std::array<double, N + 1> d{};
    double s = std::sin(a.value()), c = std::cos(a.value());
    const double cyc[4] = {c, -s, -c, s};
    for (int k = 0; k <= N; ++k) d[static_cast<std::size_t>(k)] = cyc[k % 4];
    return a.compose(d);
}

/// a^p for real p, a > 0.
template <int N>
Jet<N> pow(const Jet<N>& a, double p) {
    std::array<double, N + 1> d{};
    double a0 = a.value();
    double coef = 1.0;
    for (int k = 0; k <= N; ++k) {
        d[static_cast<std::size_t>(k)] = coef * std::pow(a0, p - k);
        coef *= (p - k);
    }
    return a.compose(d);
}

template <int N>
Jet<N> sqrt(const Jet<N>& a) {
    return pow(a, 0.5);
}

/// First partial derivative with respect to variable `var`, one order lower.
template <int N>
    requires(N >= 1)
Jet<N - 1> diff(const Jet<N>& a, int var) {
    Jet<N - 1> r;
    const auto& Lo = detail::layout<N - 1>;
    const auto& Hi = detail::layout<N>;
    for (std::size_t k = 0; k < Lo.size; ++k) {
        auto e = Lo.exps[k];
        int ek = e[static_cast<std::size_t>(var)];
        e[static_cast<std::size_t>(var)] += 1;
        int src = Hi.index_of(e[0], e[1], e[2]);
        r.coeff_ref(static_cast<int>(k)) = (ek + 1) * a.coeff(src);
    }
    return r;
}

template <int N> Jet<N - 1> d_t(const Jet<N>& a) { return diff(a, 0); }
/// Spatial derivative along direction i (0 = x, 1 = y).
template <int N> Jet<N - 1> d_x(const Jet<N>& a, int i) { return diff(a, i + 1); }

} // namespace carleman
