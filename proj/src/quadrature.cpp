#include "nbmmse/quadrature.hpp"

namespace nbmmse {

void QuadratureSpec::validate() const
{
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw std::invalid_argument("QuadratureSpec: rel_tol must be in (0, 1)");
    if (!(abs_tol > 0.0 && abs_tol < 1.0))
        throw std::invalid_argument("QuadratureSpec: abs_tol must be in (0, 1)");
    if (max_subdivisions < 1)
        throw std::invalid_argument("QuadratureSpec: max_subdivisions must be >= 1");
    if (!(tail_mass_bound > 0.0 && tail_mass_bound <= abs_tol / 10.0))
        throw std::invalid_argument("QuadratureSpec: tail_mass_bound must be in (0, abs_tol/10]");
}

}  // namespace nbmmse
