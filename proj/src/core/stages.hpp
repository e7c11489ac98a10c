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

// Pipeline stages: one entry per CLI subcommand. Each stage reads the
// artifacts named by its options and writes explicit output paths.

#ifndef CMTNED_CORE_STAGES_HPP_
#define CMTNED_CORE_STAGES_HPP_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cmt {

struct StageOption {
  std::string key;   // also the CLI long flag
  std::string help;
  std::optional<std::string> default_value;  // nullopt: required
};

struct StageInfo {
  std::string name;
  std::string help;
  std::vector<StageOption> options;  // includes the shared seed/deterministic/jobs
};

const std::vector<StageInfo>& Stages();
const StageInfo* FindStage(std::string_view name);

using StageArgs = std::map<std::string, std::string>;
using StageLog = std::function<void(const std::string&)>;

// Throws cmt::Error on unknown stages or options, missing inputs (naming the
// producing stage) and any contract violation.
void RunStage(const std::string& name, const StageArgs& args, const StageLog& log);

}  // namespace cmt

#endif  // CMTNED_CORE_STAGES_HPP_
