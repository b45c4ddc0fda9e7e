#pragma once

#include <stdexcept>
#include <string>

namespace varint {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidBoundary : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class OracleError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Errors tied to a particular interior node of the trajectory.
class NodeError : public Error {
public:
    NodeError(const std::string& what, int node) : Error(what), node_(node) {}
    int node() const noexcept { return node_; }

private:
    int node_;
};

class SingularDiagonalBlock : public NodeError {
public:
    explicit SingularDiagonalBlock(int node)
        : NodeError("singular diagonal block at node " + std::to_string(node), node) {}
};

class DivergedAtNode : public NodeError {
public:
    explicit DivergedAtNode(int node)
        : NodeError("non-finite update at node " + std::to_string(node), node) {}
};

class InvalidMonitor : public NodeError {
public:
    explicit InvalidMonitor(int interval)
        : NodeError("monitor function is not positive on interval " + std::to_string(interval),
                    interval) {}
};

class RefinementKnotClash : public Error {
public:
    using Error::Error;
};

class DriftTooStrong : public Error {
public:
    using Error::Error;
};

class SingularPotential : public Error {
public:
    using Error::Error;
};

}  // namespace varint
