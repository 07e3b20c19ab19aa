#ifndef QNET_ERRORS_HPP
#define QNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qnet {

// Base class for everything this library throws deliberately.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct SingularSystem : Error {
    explicit SingularSystem(const std::string& what) : Error(what) {}
};

struct NotIrreducible : Error {
    explicit NotIrreducible(const std::string& what) : Error(what) {}
};

struct CapacityTooSmall : Error {
    explicit CapacityTooSmall(const std::string& what) : Error(what) {}
};

struct SingularOrReducible : Error {
    explicit SingularOrReducible(const std::string& what) : Error(what) {}
};

struct ZeroProbabilityState : Error {
    explicit ZeroProbabilityState(const std::string& what) : Error(what) {}
};

struct UnstableNode : Error {
    int node;  // 0-based
    UnstableNode(int node_, const std::string& what) : Error(what), node(node_) {}
};

struct DegenerateLoads : Error {
    explicit DegenerateLoads(const std::string& what) : Error(what) {}
};

struct MethodDisagreement : Error {
    explicit MethodDisagreement(const std::string& what) : Error(what) {}
};

struct GuardExceeded : Error {
    explicit GuardExceeded(const std::string& what) : Error(what) {}
};

struct InsufficientSamples : Error {
    explicit InsufficientSamples(const std::string& what) : Error(what) {}
};

struct UnstableOpenModel : Error {
    explicit UnstableOpenModel(const std::string& what) : Error(what) {}
};

struct SpecParseError : Error {
    explicit SpecParseError(const std::string& what) : Error(what) {}
};

}  // namespace qnet

#endif  // QNET_ERRORS_HPP
