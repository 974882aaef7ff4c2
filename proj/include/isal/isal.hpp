#pragma once

#include "isal/errors.hpp"
#include "isal/core_model.hpp"
#include "isal/channel.hpp"
#include "isal/linalg.hpp"
#include "isal/fim.hpp"
#include "isal/optimizer.hpp"
#include "isal/schemes.hpp"
#include "isal/rlm_owr.hpp"
#include "isal/scenarios.hpp"
#include "isal/config.hpp"
