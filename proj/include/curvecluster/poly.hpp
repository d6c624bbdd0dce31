#pragma once

#include <cstddef>
#include <vector>

namespace curvecluster {

// Dense univariate polynomial with double coefficients, ascending powers.
// The builtin kernel shapes are low-degree polynomials on [-1, 1], so every
// kernel moment and covariance integral the library needs has a closed form;
// this tiny engine evaluates those forms exactly instead of by quadrature.
class Poly {
  public:
    Poly() = default;
    explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }
    static Poly constant(double v) { return Poly({v}); }

    const std::vector<double>& coeffs() const { return c_; }
    std::size_t degree() const { return c_.empty() ? 0 : c_.size() - 1; }

    double eval(double u) const {
        double acc = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) acc = acc * u + c_[i];
        return acc;
    }

    Poly operator*(const Poly& o) const {
        if (c_.empty() || o.c_.empty()) return Poly();
        std::vector<double> out(c_.size() + o.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < o.c_.size(); ++j) out[i + j] += c_[i] * o.c_[j];
        return Poly(std::move(out));
    }

    Poly operator+(const Poly& o) const {
        std::vector<double> out(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i) out[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i) out[i] += o.c_[i];
        return Poly(std::move(out));
    }

    Poly scaled(double f) const {
        std::vector<double> out(c_);
        for (double& v : out) v *= f;
        return Poly(std::move(out));
    }

    // p(alpha*u + beta) expanded back into powers of u.
    Poly compose_linear(double alpha, double beta) const {
        Poly result;           // zero
        Poly arg({beta, alpha});
        Poly power = Poly::constant(1.0);
        for (std::size_t i = 0; i < c_.size(); ++i) {
            result = result + power.scaled(c_[i]);
            if (i + 1 < c_.size()) power = power * arg;
        }
        return result;
    }

    // times u^l
    Poly shifted_up(std::size_t l) const {
        if (c_.empty()) return Poly();
        std::vector<double> out(c_.size() + l, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i) out[i + l] = c_[i];
        return Poly(std::move(out));
    }

    // definite integral over [a, b]
    double integral(double a, double b) const {
        double fb = 0.0, fa = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) {
            const double k = c_[i] / static_cast<double>(i + 1);
            fb = fb * b + k;
            fa = fa * a + k;
        }
        return fb * b - fa * a;
    }

  private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }
    std::vector<double> c_;
};

}  // namespace curvecluster
