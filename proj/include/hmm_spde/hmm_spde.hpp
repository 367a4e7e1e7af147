#pragma once

#include "hmm_spde/averaging.hpp"
#include "hmm_spde/coefficients.hpp"
#include "hmm_spde/direct.hpp"
#include "hmm_spde/experiments.hpp"
#include "hmm_spde/hmm.hpp"
#include "hmm_spde/microsolver.hpp"
#include "hmm_spde/noise.hpp"
#include "hmm_spde/quadrature.hpp"
#include "hmm_spde/spectral.hpp"
#include "hmm_spde/stats.hpp"
