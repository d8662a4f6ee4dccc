#pragma once

#include "agra/adam.hpp"
#include "agra/audit.hpp"
#include "agra/dataset.hpp"
#include "agra/error.hpp"
#include "agra/experiment_config.hpp"
#include "agra/filter.hpp"
#include "agra/losses.hpp"
#include "agra/metrics.hpp"
#include "agra/model.hpp"
#include "agra/noise.hpp"
#include "agra/parallel.hpp"
#include "agra/rng.hpp"
#include "agra/sampler.hpp"
#include "agra/similarity.hpp"
#include "agra/sparse.hpp"
#include "agra/tfidf.hpp"
#include "agra/trainer.hpp"
