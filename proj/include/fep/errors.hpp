#pragma once

#include <stdexcept>
#include <string>

namespace fep {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDensity : Error {
    explicit InvalidDensity(double rho)
        : Error("density must lie in (1/2, 1), got " + std::to_string(rho)) {}
};

struct NonErgodicWord : Error {
    NonErgodicWord() : Error("word contains adjacent empty sites; probability is 0") {}
};

struct EmptySupport : Error {
    using Error::Error;
};

struct DensityOutOfRange : Error {
    using Error::Error;
};

struct WindowTooLarge : Error {
    using Error::Error;
};

struct NonErgodicStart : Error {
    NonErgodicStart() : Error("initial configuration has adjacent empty sites") {}
};

struct HorizonNonPositive : Error {
    HorizonNonPositive() : Error("time horizon must be positive") {}
};

struct EmptyStateSpace : Error {
    using Error::Error;
};

struct Reducible : Error {
    explicit Reducible(std::string what, int classes)
        : Error(std::move(what)), communicating_classes(classes) {}
    int communicating_classes;
};

struct SupportExceedsRing : Error {
    using Error::Error;
};

struct UnstableGrid : Error {
    using Error::Error;
};

struct ConfigInvalid : Error {
    using Error::Error;
};

}  // namespace fep
