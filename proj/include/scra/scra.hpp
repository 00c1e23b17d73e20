#pragma once

// Umbrella header for the SCRA-VQA pipeline library.

#include "scra/answer.hpp"
#include "scra/cache.hpp"
#include "scra/captioning.hpp"
#include "scra/completion.hpp"
#include "scra/config.hpp"
#include "scra/errors.hpp"
#include "scra/evaluation.hpp"
#include "scra/hash.hpp"
#include "scra/pipeline.hpp"
#include "scra/prompt.hpp"
#include "scra/qa_synthesis.hpp"
#include "scra/relevance.hpp"
#include "scra/report.hpp"
#include "scra/rerank.hpp"
#include "scra/serialization.hpp"
#include "scra/stub_backends.hpp"
#include "scra/summarize.hpp"
#include "scra/text.hpp"
