#pragma once

#include "gradtree/baselines.hpp"
#include "gradtree/builder.hpp"
#include "gradtree/common.hpp"
#include "gradtree/data.hpp"
#include "gradtree/loss.hpp"
#include "gradtree/metrics.hpp"
#include "gradtree/model.hpp"
#include "gradtree/model_io.hpp"
#include "gradtree/survival.hpp"
#include "gradtree/tree.hpp"
