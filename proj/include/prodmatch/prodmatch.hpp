#pragma once

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/linalg.hpp"
#include "prodmatch/core/random.hpp"
#include "prodmatch/domain/corpus.hpp"
#include "prodmatch/domain/corpus_io.hpp"
#include "prodmatch/domain/embedding_file.hpp"
#include "prodmatch/domain/features.hpp"
#include "prodmatch/domain/offer.hpp"
#include "prodmatch/domain/text.hpp"
#include "prodmatch/encoder/fusion.hpp"
#include "prodmatch/encoder/head_io.hpp"
#include "prodmatch/encoder/projection_head.hpp"
#include "prodmatch/eval/metrics.hpp"
#include "prodmatch/eval/report.hpp"
#include "prodmatch/hitl/confusion.hpp"
#include "prodmatch/hitl/precision.hpp"
#include "prodmatch/hitl/rows.hpp"
#include "prodmatch/hitl/simulate.hpp"
#include "prodmatch/hitl/store.hpp"
#include "prodmatch/retrieval/jaro_winkler.hpp"
#include "prodmatch/retrieval/match.hpp"
#include "prodmatch/retrieval/match_index.hpp"
#include "prodmatch/retrieval/prediction.hpp"
#include "prodmatch/synth/generator.hpp"
#include "prodmatch/train/adamw.hpp"
#include "prodmatch/train/batching.hpp"
#include "prodmatch/train/supcon.hpp"
#include "prodmatch/train/trainer.hpp"
