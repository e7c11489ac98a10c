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

// cmtned command line: one subcommand per pipeline stage. Subcommands and
// their options are discovered from the library, so the CLI never duplicates
// the stage table. Options may also come from an INI file (--config) with one
// [section] per subcommand; command-line flags win over the file.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmtned/cmtned.h"

namespace {

struct StageBinding {
  std::string name;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;  // key -> flag storage
  std::map<std::string, CLI::Option*> options;
};

int Die(const char* stage, cmt_status status) {
  std::fprintf(stderr, "cmtned%s%s: error [%s]: %s\n", stage ? " " : "", stage ? stage : "",
               cmt_status_name(status), cmt_last_error());
  return static_cast<int>(status);
}

void PrintLine(const char* line, void* /*user*/) {
  std::fprintf(stdout, "%s\n", line);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cmtned: cluster-based mention typing for named entity disambiguation"};
  app.set_version_flag("--version", std::string(cmt_version()));
  app.set_config("--config", "", "INI file with one [section] per subcommand");
  app.allow_config_extras(CLI::config_extras_mode::error);
  // Values such as `hidden = 500,300` stay one string; the library splits lists.
  app.get_config_formatter_base()->arrayBounds('\x02', '\x03')->arrayDelimiter('\x1f');
  app.require_subcommand(1);

  const size_t stage_count = cmt_stage_count();
  std::vector<StageBinding> stages(stage_count);
  for (size_t s = 0; s < stage_count; ++s) {
    StageBinding& b = stages[s];
    b.name = cmt_stage_name(s);
    const char* help = nullptr;
    size_t n = 0;
    if (cmt_stage_help(b.name.c_str(), &help) != CMT_OK ||
        cmt_stage_option_count(b.name.c_str(), &n) != CMT_OK) {
      return Die(b.name.c_str(), CMT_ERR_INTERNAL);
    }
    b.app = app.add_subcommand(b.name, help);
    for (size_t i = 0; i < n; ++i) {
      const char *key = nullptr, *opt_help = nullptr, *def = nullptr;
      if (cmt_stage_option(b.name.c_str(), i, &key, &opt_help, &def) != CMT_OK) {
        return Die(b.name.c_str(), CMT_ERR_INTERNAL);
      }
      std::string text = opt_help;
      if (!def) text += " (required)";
      CLI::Option* opt = b.app->add_option(std::string("--") + key, b.values[key], text);
      if (def && *def) opt->default_str(def);
      b.options[key] = opt;
    }
  }

  CLI11_PARSE(app, argc, argv);

  for (StageBinding& b : stages) {
    if (!b.app->parsed()) continue;
    cmt_options* options = nullptr;
    cmt_status st = cmt_options_create(&options);
    if (st != CMT_OK) return Die(b.name.c_str(), st);
    // Only explicitly given values travel; the library applies its defaults.
    for (const auto& [key, opt] : b.options) {
      if (opt->count() == 0) continue;
      st = cmt_options_set(options, key.c_str(), b.values[key].c_str());
      if (st != CMT_OK) {
        cmt_options_free(options);
        return Die(b.name.c_str(), st);
      }
    }
    st = cmt_stage_run(b.name.c_str(), options, PrintLine, nullptr);
    cmt_options_free(options);
    if (st != CMT_OK) return Die(b.name.c_str(), st);
  }
  return 0;
}
