#pragma once

#include "cascinv/activation.hpp"
#include "cascinv/cascade.hpp"
#include "cascinv/config.hpp"
#include "cascinv/error.hpp"
#include "cascinv/evaluation.hpp"
#include "cascinv/graph.hpp"
#include "cascinv/inference.hpp"
#include "cascinv/meanfield.hpp"
#include "cascinv/parallel.hpp"
#include "cascinv/random.hpp"
