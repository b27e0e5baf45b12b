#ifndef RIESZPOT_ERROR_HPP_
#define RIESZPOT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace rieszpot {

/// Thrown when an operation receives input that violates its contract
/// (dimension mismatch, inversion pole, duplicate points, bad parameters).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidInput(message);
}

} // namespace rieszpot

#endif // RIESZPOT_ERROR_HPP_
