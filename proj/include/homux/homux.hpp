#pragma once

#include "homux/bvn.hpp"
#include "homux/candidates.hpp"
#include "homux/communities.hpp"
#include "homux/data_model.hpp"
#include "homux/dyadic.hpp"
#include "homux/error.hpp"
#include "homux/inference.hpp"
#include "homux/info.hpp"
#include "homux/io.hpp"
#include "homux/metrics.hpp"
#include "homux/pipeline.hpp"
#include "homux/synth.hpp"
#include "homux/validation.hpp"
