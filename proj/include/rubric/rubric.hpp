#pragma once

#include "rubric/classifiers/grid_search.hpp"
#include "rubric/classifiers/model.hpp"
#include "rubric/corpus.hpp"
#include "rubric/error.hpp"
#include "rubric/experts.hpp"
#include "rubric/features.hpp"
#include "rubric/feedback.hpp"
#include "rubric/hashing.hpp"
#include "rubric/random.hpp"
#include "rubric/rational.hpp"
#include "rubric/reporting.hpp"
#include "rubric/serialization.hpp"
#include "rubric/store/job_store.hpp"
#include "rubric/store/model_artifact.hpp"
#include "rubric/synth_corpus.hpp"
#include "rubric/text_preprocess.hpp"
#include "rubric/timestamp.hpp"
#include "rubric/unicode.hpp"
