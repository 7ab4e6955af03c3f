#ifndef WAVEFRONT_ERRORS_HPP
#define WAVEFRONT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wavefront {

/// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An input lies outside the mathematical domain of the operation.
struct DomainError : Error {
    using Error::Error;
};

/// The characteristic function has no real roots (speed below critical).
struct NoRealRoots : Error {
    using Error::Error;
};

/// A bracketing step failed to localize the requested minimum or root.
struct NoMinimumInBracket : Error {
    using Error::Error;
};

/// Field magnitude crossed the configured blow-up threshold.
struct BlowUp : Error {
    using Error::Error;
};

/// A non-finite value appeared during time stepping.
struct NumericalFailure : Error {
    using Error::Error;
};

/// An iteration exhausted its budget without meeting its tolerance.
struct NoConvergence : Error {
    using Error::Error;
};

/// Profile relaxation keeps drifting: the requested wave speed is wrong.
struct SpeedMismatch : Error {
    using Error::Error;
};

/// The exponential tail window is too short or too noisy to trust.
struct TailFitUnreliable : Error {
    using Error::Error;
};

/// Logarithmic fitting was asked for on non-positive samples.
struct NonPositiveField : Error {
    using Error::Error;
};

/// A series has too few usable samples for the requested fit.
struct InsufficientData : Error {
    using Error::Error;
};

/// A rate fit would need logs of values that are zero or negative.
struct NonPositiveValues : Error {
    using Error::Error;
};

/// No sampled box satisfies the nonlinearity inequalities near kappa.
struct NoAdmissibleParams : Error {
    using Error::Error;
};

/// An envelope parameter exceeds its admissibility budget.
struct ParameterOutOfBudget : Error {
    using Error::Error;
};

/// The profile slope degenerates where the construction needs it positive.
struct DegenerateProfile : Error {
    using Error::Error;
};

/// The trajectory's initial history does not lie between the envelopes.
struct InitialDataOutsideEnvelope : Error {
    using Error::Error;
};

/// A field offered as a comparison solution failed certification.
struct CertificationFailed : Error {
    using Error::Error;
};

/// A configuration file or flag set is malformed; carries location info.
struct ConfigError : Error {
    int line = 0;            // 1-based line in the config file, 0 if n/a
    std::string field;       // offending key, empty if n/a
    ConfigError(const std::string& msg, int line_ = 0, std::string field_ = "")
        : Error(msg), line(line_), field(std::move(field_)) {}
};

} // namespace wavefront

#endif
