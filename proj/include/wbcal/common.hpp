#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbcal {

using cd = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cd kJ{0.0, 1.0};

// thrown for malformed sizes / indices
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// training beams whose combiner Gram matrix cannot be inverted
struct IllConditionedBeams : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw InvalidArgument(what);
}

// CN(0, var)
inline cd complex_normal(Rng& rng, double var = 1.0)
{
    std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
    double re = n(rng);
    double im = n(rng);
    return {re, im};
}

// wrap into [-1, 1)
inline double wrap_unit(double v)
{
    double w = std::fmod(v + 1.0, 2.0);
    if (w < 0) w += 2.0;
    return w - 1.0;
}

}  // namespace wbcal
