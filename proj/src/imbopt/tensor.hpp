#pragma once

#include <cstddef>
#include <vector>

#include "imbopt/errors.hpp"

namespace imbopt {

// Below this a vector is treated as having zero norm (normalizations and
// angles are undefined).
inline constexpr double kNormEpsilon = 1e-12;

/// Dense row-major array of 64-bit reals. Constructors reject non-finite
/// entries unless allow_nonfinite is set.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
    Tensor(std::vector<std::size_t> shape, std::vector<double> data,
           bool allow_nonfinite = false);

    static Tensor scalar(double v);
    static Tensor vector(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

double dot(const std::vector<double>& u, const std::vector<double>& v);
double l2_norm(const std::vector<double>& u);

/// cos of the angle between u and v, clamped to [-1, 1]. Requires both norms
/// above kNormEpsilon, else DomainError.
double cosine_angle(const std::vector<double>& u, const std::vector<double>& v);

// Small vector helpers shared by the optimizer and theory modules.
std::vector<double> vec_add(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> vec_sub(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> vec_scale(const std::vector<double>& a, double s);
void vec_axpy(std::vector<double>& y, double a, const std::vector<double>& x);  // y += a*x

}  // namespace imbopt
