#include "qhall/linalg.hpp"

#include <cmath>

#include "qhall/error.hpp"

namespace qhall {

Eigensystem eigensolve(const CMatrix& h) {
    if (h.rows() != h.cols()) {
        throw InvalidArgument("eigensolve: matrix is not square");
    }
    if (h.rows() == 0) {
        return {};
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigensolve: Hermitian eigensolver did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

RVector eigenvalues(const CMatrix& h) {
    if (h.rows() != h.cols()) {
        throw InvalidArgument("eigenvalues: matrix is not square");
    }
    if (h.rows() == 0) {
        return {};
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigenvalues: Hermitian eigensolver did not converge");
    }
    return solver.eigenvalues();
}

double hermiticity_defect(const CMatrix& h) {
    if (h.rows() != h.cols()) {
        throw InvalidArgument("hermiticity_defect: matrix is not square");
    }
    return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

double reduce_phase(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    // fmod of a value just below a multiple of 2*pi can round up to 2*pi.
    if (r >= kTwoPi) {
        r = 0.0;
    }
    return r;
}

std::vector<double> to_std(const RVector& v) {
    return {v.data(), v.data() + v.size()};
}

}  // namespace qhall
