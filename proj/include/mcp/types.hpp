#pragma once

#include <complex>

#include <Eigen/Dense>

namespace mcp {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

constexpr double kLn2 = 0.69314718055994530942;

inline double nats_to_bits(double nats) { return nats / kLn2; }
inline double bits_to_nats(double bits) { return bits * kLn2; }

// snr_db = 10 log10(snr)
double db_to_linear(double db);
double linear_to_db(double snr);

}  // namespace mcp
