// Copyright 2026 The cmtned Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmtned/cmtned.h"

#include <exception>
#include <memory>
#include <new>
#include <string>

#include "core/common.hpp"
#include "core/eval.hpp"
#include "core/ranker.hpp"
#include "core/stages.hpp"

struct cmt_options {
  cmt::StageArgs values;
};

struct cmt_ranker {
  std::unique_ptr<cmt::RankerModel> model;
};

namespace {

thread_local std::string g_last_error;

cmt_status Record(cmt_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs |fn|, translating exceptions into status codes.
template <typename Fn>
cmt_status Guard(Fn&& fn) {
  try {
    fn();
    return CMT_OK;
  } catch (const cmt::Error& e) {
    return Record(static_cast<cmt_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Record(CMT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Record(CMT_ERR_INTERNAL, e.what());
  } catch (...) {
    return Record(CMT_ERR_INTERNAL, "unknown error");
  }
}

void Require(bool ok, const char* what) {
  if (!ok) cmt::Fail(cmt::ErrorCode::kInvalidArgument, what);
}

const cmt::StageInfo& Stage(const char* name) {
  Require(name != nullptr, "stage name is null");
  const cmt::StageInfo* info = cmt::FindStage(name);
  if (!info) cmt::Fail(cmt::ErrorCode::kInvalidArgument, std::string("unknown stage '") + name + "'");
  return *info;
}

}  // namespace

extern "C" {

const char* cmt_version(void) { return "1.0.0"; }

const char* cmt_status_name(cmt_status status) {
  switch (status) {
    case CMT_OK: return "CMT_OK";
    case CMT_ERR_INVALID_ARGUMENT: return "CMT_ERR_INVALID_ARGUMENT";
    case CMT_ERR_IO: return "CMT_ERR_IO";
    case CMT_ERR_PARSE: return "CMT_ERR_PARSE";
    case CMT_ERR_CONTRACT: return "CMT_ERR_CONTRACT";
    case CMT_ERR_MISSING_ARTIFACT: return "CMT_ERR_MISSING_ARTIFACT";
    case CMT_ERR_VERSION: return "CMT_ERR_VERSION";
    case CMT_ERR_INTERNAL: return "CMT_ERR_INTERNAL";
  }
  return "CMT_ERR_UNKNOWN";
}

const char* cmt_last_error(void) { return g_last_error.c_str(); }

cmt_status cmt_options_create(cmt_options** out) {
  return Guard([&] {
    Require(out != nullptr, "output pointer is null");
    *out = new cmt_options();
  });
}

void cmt_options_free(cmt_options* options) { delete options; }

cmt_status cmt_options_set(cmt_options* options, const char* key, const char* value) {
  return Guard([&] {
    Require(options && key && value, "options, key and value must be non-null");
    Require(*key != '\0', "option key is empty");
    options->values[key] = value;
  });
}

size_t cmt_stage_count(void) { return cmt::Stages().size(); }

const char* cmt_stage_name(size_t index) {
  const auto& stages = cmt::Stages();
  return index < stages.size() ? stages[index].name.c_str() : nullptr;
}

cmt_status cmt_stage_help(const char* stage, const char** help) {
  return Guard([&] {
    Require(help != nullptr, "output pointer is null");
    *help = Stage(stage).help.c_str();
  });
}

cmt_status cmt_stage_option_count(const char* stage, size_t* count) {
  return Guard([&] {
    Require(count != nullptr, "output pointer is null");
    *count = Stage(stage).options.size();
  });
}

cmt_status cmt_stage_option(const char* stage, size_t index, const char** key, const char** help,
                            const char** default_value) {
  return Guard([&] {
    const auto& info = Stage(stage);
    Require(index < info.options.size(), "option index out of range");
    const auto& o = info.options[index];
    if (key) *key = o.key.c_str();
    if (help) *help = o.help.c_str();
    if (default_value) *default_value = o.default_value ? o.default_value->c_str() : nullptr;
  });
}

cmt_status cmt_stage_run(const char* stage, const cmt_options* options, cmt_log_fn log, void* user) {
  return Guard([&] {
    const auto& info = Stage(stage);
    static const cmt::StageArgs kEmpty;
    cmt::RunStage(info.name, options ? options->values : kEmpty, [&](const std::string& line) {
      if (log) log(line.c_str(), user);
    });
  });
}

cmt_status cmt_ranker_load(const char* path, cmt_ranker** out) {
  return Guard([&] {
    Require(path && out, "path and output pointer must be non-null");
    auto r = std::make_unique<cmt_ranker>();
    r->model = cmt::RankerModel::Load(path);
    *out = r.release();
  });
}

void cmt_ranker_free(cmt_ranker* ranker) { delete ranker; }

cmt_status cmt_ranker_input_size(const cmt_ranker* ranker, size_t* size) {
  return Guard([&] {
    Require(ranker && size, "ranker and output pointer must be non-null");
    *size = ranker->model->input_size();
  });
}

cmt_status cmt_ranker_feature_name(const cmt_ranker* ranker, size_t index, const char** name) {
  return Guard([&] {
    Require(ranker && name, "ranker and output pointer must be non-null");
    Require(index < ranker->model->input_size(), "feature index out of range");
    *name = ranker->model->config().feature_names[index].c_str();
  });
}

cmt_status cmt_ranker_score(const cmt_ranker* ranker, const double* features, size_t n,
                            double* probability) {
  return Guard([&] {
    Require(ranker && features && probability, "ranker, features and output must be non-null");
    *probability = ranker->model->TrueProb({features, n});
  });
}

cmt_status cmt_evaluate_files(const char* corpus_path, const char* predictions_path, cmt_metrics* out) {
  return Guard([&] {
    Require(corpus_path && predictions_path && out, "paths and output must be non-null");
    auto golds = cmt::GoldsFromCorpus(cmt::ParseCorpus(corpus_path));
    auto row = cmt::Evaluate("", golds, cmt::ReadPredictions(predictions_path));
    *out = {row.micro.precision, row.micro.recall, row.micro.f1, row.bot_f1, row.inkb};
  });
}

}  // extern "C"
