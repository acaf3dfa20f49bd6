#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace vshock {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Cplx = std::complex<double>;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define VSHOCK_DEFINE_ERROR(Name)                                   \
    struct Name : Error {                                           \
        explicit Name(const std::string& msg) : Error(msg) {}       \
    }

VSHOCK_DEFINE_ERROR(NonRealSpectrum);
VSHOCK_DEFINE_ERROR(ZeroCharacteristic);
VSHOCK_DEFINE_ERROR(InconsistentEll);
VSHOCK_DEFINE_ERROR(SingularViscosity);
VSHOCK_DEFINE_ERROR(NoConnection);
VSHOCK_DEFINE_ERROR(NonTransverse);
VSHOCK_DEFINE_ERROR(ContinuationFailed);
VSHOCK_DEFINE_ERROR(EssentialSpectrum);
VSHOCK_DEFINE_ERROR(StiffIntegration);
VSHOCK_DEFINE_ERROR(PhaseJump);
VSHOCK_DEFINE_ERROR(DomainError);
VSHOCK_DEFINE_ERROR(NotMonotone);
VSHOCK_DEFINE_ERROR(QuadratureFailure);
VSHOCK_DEFINE_ERROR(BlowUp);
VSHOCK_DEFINE_ERROR(StepUnderflow);
VSHOCK_DEFINE_ERROR(FixedPointDivergence);
VSHOCK_DEFINE_ERROR(OrthogonalityViolation);
VSHOCK_DEFINE_ERROR(RankDeficient);
VSHOCK_DEFINE_ERROR(ConfigError);
VSHOCK_DEFINE_ERROR(IoError);

#undef VSHOCK_DEFINE_ERROR

/// Positive and negative parts of a real number.
inline double pos_part(double x) { return x > 0.0 ? x : 0.0; }
inline double neg_part(double x) { return x < 0.0 ? -x : 0.0; }

inline double sq(double x) { return x * x; }

}  // namespace vshock
