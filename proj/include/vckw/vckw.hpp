#pragma once

#include "vckw/clustering.hpp"
#include "vckw/context.hpp"
#include "vckw/data.hpp"
#include "vckw/dense.hpp"
#include "vckw/errors.hpp"
#include "vckw/gradcheck.hpp"
#include "vckw/keywords.hpp"
#include "vckw/losses.hpp"
#include "vckw/metrics.hpp"
#include "vckw/pipeline.hpp"
#include "vckw/rng.hpp"
#include "vckw/synth.hpp"
