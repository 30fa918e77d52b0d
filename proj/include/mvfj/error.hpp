#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>

namespace mvfj {

/// Invalid argument, configuration value, or shape mismatch.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of a regime-specific formula does not hold.
class PreconditionError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// A closed-form expression leaves the real domain (e.g. a fractional power of
/// a negative number).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// The feedback quadratic has a negative discriminant, so no real stationary
/// control exists for this (agent, time) point.
class ComplexRootsError : public std::runtime_error {
public:
  ComplexRootsError(double t1, double t2, double t3);

  double t1() const noexcept { return t1_; }
  double t2() const noexcept { return t2_; }
  double t3() const noexcept { return t3_; }
  double discriminant() const noexcept { return t2_ * t2_ - 4.0 * t1_ * t3_; }

private:
  double t1_;
  double t2_;
  double t3_;
};

/// Raised by the simulator when a control policy throws. The original
/// exception is kept so callers can classify it.
class PolicyError : public std::runtime_error {
public:
  PolicyError(std::size_t step, std::optional<std::size_t> agent,
              std::exception_ptr cause, const std::string &what);

  std::size_t step() const noexcept { return step_; }
  std::optional<std::size_t> agent() const noexcept { return agent_; }
  std::exception_ptr cause() const noexcept { return cause_; }

private:
  std::size_t step_;
  std::optional<std::size_t> agent_;
  std::exception_ptr cause_;
};

/// Wraps an exception thrown while computing the control of one agent.
class AgentControlError : public std::runtime_error {
public:
  AgentControlError(std::size_t agent, std::exception_ptr cause,
                    const std::string &what);

  std::size_t agent() const noexcept { return agent_; }
  std::exception_ptr cause() const noexcept { return cause_; }

private:
  std::size_t agent_;
  std::exception_ptr cause_;
};

} // namespace mvfj
