#pragma once

#include <stdexcept>
#include <string>

namespace homux {

/// Base of every error raised by the library. `category()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    enum class Category { config, data, estimation };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Category::config, what) {}
};

/// Malformed input files or mismatched schemas.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(Category::data, what) {}
};

/// Index out of range, duplicate hyperedges, broken partitions.
class StructuralError : public Error {
public:
    explicit StructuralError(const std::string& what) : Error(Category::data, what) {}
};

/// A variable carries no information (constant column, single category).
class DegenerateVariableError : public Error {
public:
    explicit DegenerateVariableError(const std::string& what) : Error(Category::data, what) {}
};

class SingularCovarianceError : public Error {
public:
    explicit SingularCovarianceError(const std::string& what) : Error(Category::estimation, what) {}
};

class EstimationError : public Error {
public:
    explicit EstimationError(const std::string& what) : Error(Category::estimation, what) {}
};

/// Synthetic-system parameters that do not define a valid covariance.
class SpecificationError : public Error {
public:
    explicit SpecificationError(const std::string& what) : Error(Category::config, what) {}
};

inline int exit_code(Error::Category category) {
    switch (category) {
    case Error::Category::config: return 2;
    case Error::Category::data: return 3;
    case Error::Category::estimation: return 4;
    }
    return 1;
}

} // namespace homux
