#pragma once

// Umbrella header: reference-free importance-weighted n-gram relevance
// scoring for summaries, lexical baselines, and the meta-evaluation
// harness around them.

#include "sumscore/analysis.hpp"
#include "sumscore/baselines.hpp"
#include "sumscore/corpus.hpp"
#include "sumscore/errors.hpp"
#include "sumscore/relevance.hpp"
#include "sumscore/score_matrix.hpp"
#include "sumscore/tokenize.hpp"
#include "sumscore/weighting.hpp"
