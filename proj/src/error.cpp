#include "mvfj/error.hpp"

#include <sstream>

namespace mvfj {

namespace {

std::string complex_roots_message(double t1, double t2, double t3) {
  std::ostringstream os;
  os.precision(17);
  os << "feedback quadratic has complex roots: T1=" << t1 << " T2=" << t2
     << " T3=" << t3 << " discriminant=" << (t2 * t2 - 4.0 * t1 * t3);
  return os.str();
}

} // namespace

ComplexRootsError::ComplexRootsError(double t1, double t2, double t3)
    : std::runtime_error(complex_roots_message(t1, t2, t3)), t1_(t1), t2_(t2),
      t3_(t3) {}

PolicyError::PolicyError(std::size_t step, std::optional<std::size_t> agent,
                         std::exception_ptr cause, const std::string &what)
    : std::runtime_error(what), step_(step), agent_(agent),
      cause_(std::move(cause)) {}

AgentControlError::AgentControlError(std::size_t agent,
                                     std::exception_ptr cause,
                                     const std::string &what)
    : std::runtime_error(what), agent_(agent), cause_(std::move(cause)) {}

} // namespace mvfj
