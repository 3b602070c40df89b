#pragma once

#include <stdexcept>

namespace gsql {

// Base for every failure raised while turning SQL text into a QueryAst.
class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public QueryError {
 public:
  using QueryError::QueryError;
};

class ResolutionError : public QueryError {
 public:
  using QueryError::QueryError;
};

class UnsupportedFeature : public QueryError {
 public:
  using QueryError::QueryError;
};

}  // namespace gsql
