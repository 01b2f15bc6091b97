// Command-line front end: gen-data, train, evaluate, ablate, sweep, suggest.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dsen/binary_io.h"
#include "dsen/checkpoint.h"
#include "dsen/pipeline.h"

namespace {

using namespace dsen;

// Flags named after config keys (underscores become dashes). Values given on
// the command line override the config file.
struct Settings {
  std::string config_path;
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> options;

  void Add(CLI::App* cmd, const std::set<std::string>& keys) {
    for (const std::string& key : keys) {
      if (options.count(key)) continue;
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      options[key] = cmd->add_option("--" + flag, flags[key], "config key " + key);
    }
  }

  ConfigFile Resolve() const {
    ConfigFile cfg = config_path.empty() ? ConfigFile() : ConfigFile::Load(config_path);
    std::set<std::string> known;
    for (const auto* keys : {&SchemaKeys(), &GeneratorKeys(), &TrainKeys(), &ModelKeys(),
                             &RetrievalKeys()}) {
      known.insert(keys->begin(), keys->end());
    }
    cfg.RequireKnown(known);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) cfg.Set(key, flags.at(key));
    }
    return cfg;
  }
};

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  WriteFile(path, text);
}

std::vector<std::uint32_t> ParseIds(const std::string& text) {
  std::vector<std::uint32_t> out;
  for (std::size_t v : ParseSizeList("users", text)) out.push_back(static_cast<std::uint32_t>(v));
  return out;
}

TrainResult TrainVariant(Variant v, const ModelDims& dims, const Dataset& data,
                         const TrainConfig& tc) {
  std::cerr << fmt::format("training {} ...\n", VariantName(v));
  TrainResult r = Train(v, dims, data, tc);
  std::cerr << r.history.Format();
  return r;
}

std::string RowName(Variant v) {
  switch (v) {
    case Variant::kDsen: return "DSEN";
    case Variant::kMlp: return "MLP";
    case Variant::kGru: return "GRU";
    case Variant::kAttention: return "Attention";
    case Variant::kDsenAtt: return "DSEN-ATT";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Friend suggestion by dynamic similarity evolution"};
  app.require_subcommand(1);

  // gen-data
  Settings gen_settings;
  std::string gen_out, gen_csv;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--out", gen_out, "dataset file")->required();
  gen->add_option("--csv", gen_csv, "also export samples as CSV");
  gen->add_option("--config", gen_settings.config_path, "key = value settings file");
  gen_settings.Add(gen, SchemaKeys());
  gen_settings.Add(gen, GeneratorKeys());

  // train
  Settings train_settings;
  std::string train_data, train_out, train_history, train_variant = "dsen";
  auto* train = app.add_subcommand("train", "train one model variant");
  train->add_option("--data", train_data, "dataset file")->required();
  train->add_option("--variant", train_variant, "dsen | mlp | gru | attn | dsen_att");
  train->add_option("--out", train_out, "checkpoint file")->required();
  train->add_option("--history", train_history, "history log (default: <out>.history)");
  train->add_option("--config", train_settings.config_path, "key = value settings file");
  train_settings.Add(train, TrainKeys());
  train_settings.Add(train, ModelKeys());

  // evaluate
  std::string eval_data, eval_split = "test", eval_table, eval_kv;
  std::vector<std::string> eval_checkpoints;
  auto* evaluate = app.add_subcommand("evaluate", "HIT@K / NDCG@K / AUC report");
  evaluate->add_option("--data", eval_data, "dataset file")->required();
  evaluate->add_option("--checkpoint", eval_checkpoints, "checkpoint file(s)")->required();
  evaluate->add_option("--split", eval_split, "test | val | train")
      ->check(CLI::IsMember({"test", "val", "train"}));
  evaluate->add_option("--table-out", eval_table, "write the table here");
  evaluate->add_option("--kv-out", eval_kv, "write key = value reports here");

  // ablate
  Settings ablate_settings;
  std::string ablate_data, ablate_table;
  auto* ablate = app.add_subcommand("ablate", "DSEN vs DSEN-ATT on one dataset");
  ablate->add_option("--data", ablate_data, "dataset file")->required();
  ablate->add_option("--table-out", ablate_table, "write the table here");
  ablate->add_option("--config", ablate_settings.config_path, "key = value settings file");
  ablate_settings.Add(ablate, TrainKeys());
  ablate_settings.Add(ablate, ModelKeys());

  // sweep
  Settings sweep_settings;
  std::string sweep_data, sweep_param, sweep_values, sweep_table, sweep_variant = "dsen";
  auto* sweep = app.add_subcommand("sweep", "vary one model size and report each value");
  sweep->add_option("--data", sweep_data, "dataset file")->required();
  sweep->add_option("--param", sweep_param, "embedding | gru | views")
      ->required()
      ->check(CLI::IsMember({"embedding", "gru", "views"}));
  sweep->add_option("--grid", sweep_values, "comma-separated values, e.g. 4,8,16,32")
      ->required();
  sweep->add_option("--variant", sweep_variant, "model variant");
  sweep->add_option("--table-out", sweep_table, "write the table here");
  sweep->add_option("--config", sweep_settings.config_path, "key = value settings file");
  sweep_settings.Add(sweep, TrainKeys());
  sweep_settings.Add(sweep, ModelKeys());

  // suggest
  Settings suggest_settings;
  std::string suggest_data, suggest_checkpoint, suggest_users, suggest_out;
  auto* suggest = app.add_subcommand("suggest", "top-n suggestions per user");
  suggest->add_option("--data", suggest_data, "dataset file")->required();
  suggest->add_option("--checkpoint", suggest_checkpoint, "checkpoint file")->required();
  suggest->add_option("--user-ids", suggest_users,
                      "comma-separated user ids (default: the test day's active users)");
  suggest->add_option("--out", suggest_out, "write suggestions here instead of stdout");
  suggest->add_option("--config", suggest_settings.config_path, "key = value settings file");
  suggest_settings.Add(suggest, RetrievalKeys());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      const ConfigFile cfg = gen_settings.Resolve();
      const Dataset data = GenerateSynthetic(SchemaFrom(cfg), GeneratorConfigFrom(cfg));
      SaveDataset(data, gen_out);
      if (!gen_csv.empty()) ExportSamplesCsv(data, gen_csv);
      std::cout << fmt::format("users {} days {} exposures {} samples train {} val {} test {}\n",
                               data.users(), data.days(), data.exposures().size(),
                               data.SamplesIn(Split::kTrain).size(),
                               data.SamplesIn(Split::kVal).size(),
                               data.SamplesIn(Split::kTest).size());
    } else if (train->parsed()) {
      const ConfigFile cfg = train_settings.Resolve();
      const TrainConfig tc = TrainConfigFrom(cfg);
      const Dataset data = LoadDataset(train_data);
      const ModelDims dims = ModelDimsFrom(cfg, data.schema(), tc.desk_scale);
      const TrainResult r = Train(ParseVariant(train_variant), dims, data, tc);
      SaveCheckpoint(r.model, train_out);
      WriteText(train_history.empty() ? train_out + ".history" : train_history,
                r.history.Format());
      std::cout << r.history.Format();
      std::cout << fmt::format("wall {:.1f}s\n", r.history.wall_seconds);
    } else if (evaluate->parsed()) {
      const Dataset data = LoadDataset(eval_data);
      const Split split = eval_split == "test" ? Split::kTest
                          : eval_split == "val" ? Split::kVal
                                                : Split::kTrain;
      std::vector<std::pair<std::string, EvalReport>> rows;
      std::string kv;
      for (const std::string& path : eval_checkpoints) {
        const Model model = LoadCheckpoint(path);
        const EvalReport report = Evaluate(model, data, split);
        rows.push_back({RowName(model.variant()), report});
        kv += fmt::format("[{}]\nvariant = {}\n", path, VariantName(model.variant()));
        kv += RenderKeyValue(report);
      }
      const std::string table = RenderTable(rows);
      std::cout << table;
      WriteText(eval_table, table);
      WriteText(eval_kv, kv);
    } else if (ablate->parsed()) {
      const ConfigFile cfg = ablate_settings.Resolve();
      const TrainConfig tc = TrainConfigFrom(cfg);
      const Dataset data = LoadDataset(ablate_data);
      const ModelDims dims = ModelDimsFrom(cfg, data.schema(), tc.desk_scale);
      std::vector<std::pair<std::string, EvalReport>> rows;
      for (Variant v : {Variant::kDsen, Variant::kDsenAtt}) {
        const TrainResult r = TrainVariant(v, dims, data, tc);
        rows.push_back({RowName(v), Evaluate(r.model, data, Split::kTest)});
      }
      const std::string table = RenderTable(rows);
      std::cout << table;
      WriteText(ablate_table, table);
    } else if (sweep->parsed()) {
      const ConfigFile cfg = sweep_settings.Resolve();
      const TrainConfig tc = TrainConfigFrom(cfg);
      const Dataset data = LoadDataset(sweep_data);
      const ModelDims base = ModelDimsFrom(cfg, data.schema(), tc.desk_scale);
      const Variant variant = ParseVariant(sweep_variant);
      std::vector<std::pair<std::string, EvalReport>> rows;
      for (std::size_t value : ParseSizeList("grid", sweep_values)) {
        if (value == 0) throw ValidationError("grid", "values must be >= 1");
        ModelDims dims = base;
        std::string label;
        if (sweep_param == "embedding") {
          dims.evolution_hidden = value;
          label = fmt::format("embedding={}", value);
        } else if (sweep_param == "gru") {
          dims.gru_hidden = value;
          label = fmt::format("gru={}", value);
        } else {
          dims.views = value;
          label = fmt::format("views={}", value);
        }
        const TrainResult r = TrainVariant(variant, dims, data, tc);
        rows.push_back({label, Evaluate(r.model, data, Split::kTest)});
      }
      const std::string table = RenderTable(rows);
      std::cout << table;
      WriteText(sweep_table, table);
    } else if (suggest->parsed()) {
      const ConfigFile cfg = suggest_settings.Resolve();
      const RetrievalConfig rc = RetrievalConfigFrom(cfg);
      const Dataset data = LoadDataset(suggest_data);
      const Model model = LoadCheckpoint(suggest_checkpoint);
      const std::uint32_t day = data.test_day();
      std::vector<std::uint32_t> users;
      if (suggest_users.empty()) {
        for (const Exposure& e : data.exposures()) {
          if (e.day == day) users.push_back(e.source);
        }
      } else {
        users = ParseIds(suggest_users);
      }
      std::vector<RankedSuggestions> lists;
      for (std::uint32_t u : users) lists.push_back(Suggest(model, data, u, day, rc));
      const std::string text = FormatSuggestions(lists);
      if (suggest_out.empty()) {
        std::cout << text;
      } else {
        WriteText(suggest_out, text);
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
