#pragma once

// Umbrella header for the library.

#include <pcic/core.hpp>
#include <pcic/estimators.hpp>
#include <pcic/losses.hpp>
#include <pcic/models/generate.hpp>
#include <pcic/models/location.hpp>
#include <pcic/models/logistic.hpp>
#include <pcic/models/mcmc.hpp>
#include <pcic/models/peruggia.hpp>
#include <pcic/parallel.hpp>
#include <pcic/random.hpp>
#include <pcic/sensitivity.hpp>
#include <pcic/stats.hpp>
