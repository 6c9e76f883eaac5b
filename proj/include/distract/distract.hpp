#pragma once

// Umbrella header.

#include "distract/core/error.hpp"
#include "distract/core/gradcheck.hpp"
#include "distract/core/graph.hpp"
#include "distract/core/math.hpp"
#include "distract/core/tensor.hpp"
#include "distract/corpus/batching.hpp"
#include "distract/corpus/corpus.hpp"
#include "distract/corpus/special_tokens.hpp"
#include "distract/corpus/vocabulary.hpp"
#include "distract/model/config.hpp"
#include "distract/model/control.hpp"
#include "distract/model/encoder.hpp"
#include "distract/model/network.hpp"
#include "distract/model/parameters.hpp"
#include "distract/rouge/rouge.hpp"
#include "distract/search/beam_search.hpp"
#include "distract/search/distraction.hpp"
#include "distract/search/summarizer.hpp"
#include "distract/search/unk_replace.hpp"
#include "distract/train/adadelta.hpp"
#include "distract/train/checkpoint.hpp"
#include "distract/train/loss.hpp"
#include "distract/train/trainer.hpp"
#include "distract/version.hpp"
