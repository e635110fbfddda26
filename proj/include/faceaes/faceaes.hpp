#pragma once

#include "faceaes/error.hpp"
#include "faceaes/eval_harness.hpp"
#include "faceaes/feature_block.hpp"
#include "faceaes/fold_plan.hpp"
#include "faceaes/fvec_io.hpp"
#include "faceaes/ga_select.hpp"
#include "faceaes/linear_models.hpp"
#include "faceaes/manifest.hpp"
#include "faceaes/metrics.hpp"
#include "faceaes/model_io.hpp"
#include "faceaes/parallel.hpp"
#include "faceaes/report_table.hpp"
#include "faceaes/rng.hpp"
#include "faceaes/standardizer.hpp"
#include "faceaes/synth.hpp"
#include "faceaes/validate.hpp"
