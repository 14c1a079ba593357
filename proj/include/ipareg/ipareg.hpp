#pragma once

#include "ipareg/control.hpp"
#include "ipareg/errors.hpp"
#include "ipareg/interval.hpp"
#include "ipareg/newton.hpp"
#include "ipareg/ooo_plant.hpp"
#include "ipareg/petri_plant.hpp"
#include "ipareg/queue_plants.hpp"
#include "ipareg/report.hpp"
#include "ipareg/rng.hpp"
#include "ipareg/scenario.hpp"
#include "ipareg/stats.hpp"
