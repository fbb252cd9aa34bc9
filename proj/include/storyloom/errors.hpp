#pragma once

#include <stdexcept>
#include <string>

namespace loom {

// Base for every error the engine raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (empty prompt, bad budget, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// The prompt plus requested generation does not fit the backend context.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Network or server failure; safe to retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

// A backend answered, but not with the documented response shape.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class SettingGenerationFailed : public Error {
 public:
  using Error::Error;
};

class NameSamplingExhausted : public Error {
 public:
  using Error::Error;
};

class DescriptionGenerationFailed : public Error {
 public:
  using Error::Error;
};

class OutlineGenerationFailed : public Error {
 public:
  using Error::Error;
};

class PromptBudgetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace loom
