#pragma once

// Umbrella header for the context-aware decoding library.

#include "cad/cad_core.hpp"
#include "cad/dataset.hpp"
#include "cad/decode.hpp"
#include "cad/error.hpp"
#include "cad/external_scorer.hpp"
#include "cad/flops.hpp"
#include "cad/language_model.hpp"
#include "cad/model_uri.hpp"
#include "cad/remote_lm.hpp"
#include "cad/report.hpp"
#include "cad/rouge.hpp"
#include "cad/sampler.hpp"
#include "cad/sweep.hpp"
#include "cad/table_lm.hpp"
#include "cad/templates.hpp"
#include "cad/vocabulary.hpp"
