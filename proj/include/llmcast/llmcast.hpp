#pragma once

#include "llmcast/arma_garch.hpp"
#include "llmcast/artifact_store.hpp"
#include "llmcast/backtest.hpp"
#include "llmcast/baselines.hpp"
#include "llmcast/config.hpp"
#include "llmcast/date.hpp"
#include "llmcast/error.hpp"
#include "llmcast/eval.hpp"
#include "llmcast/features.hpp"
#include "llmcast/finetune.hpp"
#include "llmcast/forecast_parser.hpp"
#include "llmcast/gbt.hpp"
#include "llmcast/hash.hpp"
#include "llmcast/io.hpp"
#include "llmcast/labels.hpp"
#include "llmcast/llm_client.hpp"
#include "llmcast/llm_http.hpp"
#include "llmcast/market_data.hpp"
#include "llmcast/nelder_mead.hpp"
#include "llmcast/news.hpp"
#include "llmcast/pipeline.hpp"
#include "llmcast/prompt.hpp"
#include "llmcast/report.hpp"
