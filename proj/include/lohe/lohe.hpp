#ifndef LOHE_LOHE_HPP
#define LOHE_LOHE_HPP

#include "lohe/certificates.hpp"
#include "lohe/diagnostics.hpp"
#include "lohe/error.hpp"
#include "lohe/initial.hpp"
#include "lohe/integrator.hpp"
#include "lohe/linalg.hpp"
#include "lohe/model.hpp"
#include "lohe/stability.hpp"

#endif // LOHE_LOHE_HPP
