#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qhall {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Eigen-decomposition of a Hermitian matrix. Eigenvalues ascend; column n of
// `vectors` is the eigenvector belonging to values[n].
struct Eigensystem {
    RVector values;
    CMatrix vectors;
};

// Dense Hermitian eigensolver. Only the lower triangle of `h` is read.
Eigensystem eigensolve(const CMatrix& h);

// Eigenvalues only (ascending).
RVector eigenvalues(const CMatrix& h);

// Largest |H_ij - conj(H_ji)|.
double hermiticity_defect(const CMatrix& h);

// Wrap an angle into [0, 2*pi).
double reduce_phase(double phi);

std::vector<double> to_std(const RVector& v);

}  // namespace qhall
