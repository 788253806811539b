#pragma once

#include "spinchain/operators.hpp"
#include "spinchain/pulses.hpp"
#include "spinchain/hamiltonians.hpp"
#include "spinchain/dynamics.hpp"
#include "spinchain/parallel.hpp"
#include "spinchain/calibration.hpp"
#include "spinchain/circuits.hpp"
#include "spinchain/experiments.hpp"
