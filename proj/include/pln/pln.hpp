#pragma once

#include "pln/activations.hpp"
#include "pln/data.hpp"
#include "pln/metrics.hpp"
#include "pln/model.hpp"
#include "pln/serialize.hpp"
#include "pln/solvers.hpp"
#include "pln/trainer.hpp"
#include "pln/trials.hpp"
