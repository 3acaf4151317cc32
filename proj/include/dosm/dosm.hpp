#pragma once

#include "dosm/coherent.hpp"
#include "dosm/error.hpp"
#include "dosm/joint_model.hpp"
#include "dosm/marginal.hpp"
#include "dosm/mvg.hpp"
#include "dosm/numeric.hpp"
#include "dosm/oracle.hpp"
#include "dosm/orderstat.hpp"
#include "dosm/subset.hpp"
