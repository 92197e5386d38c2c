#pragma once

#include "congested/baselines.hpp"
#include "congested/config.hpp"
#include "congested/ene_agent.hpp"
#include "congested/engine.hpp"
#include "congested/errors.hpp"
#include "congested/game.hpp"
#include "congested/metrics.hpp"
#include "congested/oracle.hpp"
