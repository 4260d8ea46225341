#pragma once

#include <stdexcept>
#include <string>

namespace fbl {

// Malformed input: invalid distributions, matrices, maps, or CLI/config values.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// The requested problem instance has an empty feasible set (e.g. a distortion
// target below the best achievable distortion, or a rate budget below the
// rate-distortion function).
class infeasible_error : public std::runtime_error {
public:
    explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// An iterative routine exhausted its iteration budget without meeting its
// tolerance targets.
class convergence_error : public std::runtime_error {
public:
    explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// A resource guard tripped (e.g. a spectrum grid would exceed the cell cap).
class resource_error : public std::runtime_error {
public:
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fbl
