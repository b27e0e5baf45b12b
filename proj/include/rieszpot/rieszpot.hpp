#ifndef RIESZPOT_RIESZPOT_HPP_
#define RIESZPOT_RIESZPOT_HPP_

#include "rieszpot/balayage.hpp"
#include "rieszpot/csv.hpp"
#include "rieszpot/equilibrium.hpp"
#include "rieszpot/error.hpp"
#include "rieszpot/geometry.hpp"
#include "rieszpot/kernel.hpp"
#include "rieszpot/measure.hpp"
#include "rieszpot/nnqp.hpp"
#include "rieszpot/parallel.hpp"
#include "rieszpot/principles.hpp"
#include "rieszpot/region.hpp"
#include "rieszpot/riesz_params.hpp"
#include "rieszpot/sampling.hpp"

#endif // RIESZPOT_RIESZPOT_HPP_
