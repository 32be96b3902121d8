#pragma once

#include "splitflow/counterexample.hpp"
#include "splitflow/gamma_calculus.hpp"
#include "splitflow/norms_stats.hpp"
#include "splitflow/path_sim.hpp"
#include "splitflow/rate_lab.hpp"
#include "splitflow/spectral_model.hpp"
