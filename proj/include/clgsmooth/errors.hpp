#ifndef CLGSMOOTH_ERRORS_HPP
#define CLGSMOOTH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clgsmooth {

/// Raised when a computation degenerates numerically (singular matrix after
/// flooring, non-finite intermediate, overflowing simulation, ...).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// All particle weights of one instant collapsed to zero (or non-finite).
class degenerate_weights_error : public numerical_error {
public:
    degenerate_weights_error(int instant, const std::string& context)
        : numerical_error("degenerate particle weights at instant " + std::to_string(instant) +
                          " (" + context + ")"),
          instant_(instant) {}

    int instant() const { return instant_; }

private:
    int instant_;
};

} // namespace clgsmooth

#endif
