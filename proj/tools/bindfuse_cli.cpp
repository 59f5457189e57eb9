// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bindfuse/data/complex_jsonl.hpp"
#include "bindfuse/data/dataset.hpp"
#include "bindfuse/data/fasta.hpp"
#include "bindfuse/data/synthetic.hpp"
#include "bindfuse/fusion/metrics.hpp"
#include "bindfuse/harness/checkpoint.hpp"
#include "bindfuse/harness/config.hpp"
#include "bindfuse/harness/predict.hpp"
#include "bindfuse/harness/pretrain.hpp"
#include "bindfuse/harness/train.hpp"

namespace fs = std::filesystem;
using namespace bindfuse;
using namespace bindfuse::harness;

namespace {

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : parse_config(data::read_text(path));
}

int gen_data(std::size_t n, std::uint64_t seed, const fs::path& out, const data::GeneratorParams& params,
             bool write_split) {
  const auto samples = data::generate_synthetic(n, seed, params);
  const data::DatasetMeta meta{data::Alphabet::amino, static_cast<std::size_t>(params.extra_features)};
  data::write_dataset(out, samples, meta);
  if (write_split) data::write_text(out / "split.json", data::split_to_json(data::split(n, seed)).dump() + "\n");
  std::cerr << "wrote " << n << " samples to " << out << "\n";
  return 0;
}

int run_pretrain(const std::string& config_path, const fs::path& corpus_path, const fs::path& out,
                 const std::string& alphabet_name) {
  const auto config = load_config(config_path);
  const auto alphabet = data::parse_alphabet(alphabet_name);
  const auto corpus = parse_corpus(data::read_text(corpus_path), alphabet);
  fs::create_directories(out);
  std::string log;
  auto result = pretrain(config, corpus, alphabet, [&](const PretrainLog& e) {
    nlohmann::json j{{"epoch", e.epoch}, {"mlm_loss", e.loss}, {"masked_accuracy", e.accuracy},
                     {"wall_time", e.wall_time}};
    log += j.dump() + "\n";
    std::cerr << j.dump() << "\n";
  });
  data::write_text(out / "pretrain_log.jsonl", log);
  const auto& last = result.logs.back();
  write_json_file(out / "encoder.json",
                  save_encoder_checkpoint(config, alphabet, result.encoder, result.head, last.epoch, last.loss));
  std::cerr << "encoder checkpoint: " << (out / "encoder.json") << "\n";
  return 0;
}

int run_train(const std::string& config_path, const fs::path& data_dir, const fs::path& out,
              const std::string& ablation) {
  auto config = load_config(config_path);
  if (!ablation.empty()) config.ablation = parse_ablation(ablation);
  const auto dataset = data::read_dataset(data_dir);
  fs::create_directories(out);
  std::string epoch_log;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    epoch_log += epoch_to_json(e).dump() + "\n";
    data::write_text(out / "epochs.jsonl", epoch_log);
    std::cerr << epoch_to_json(e).dump() << "\n";
  };
  hooks.on_message = [](const std::string& m) { std::cerr << m << "\n"; };
  auto result = train(config, dataset, hooks);
  write_json_file(out / "checkpoint.json",
                  save_checkpoint(result.model, {result.best_epoch, result.best_val_loss}));
  data::write_text(out / "loss_curve.csv", loss_curve_csv(result.logs));

  const auto samples = prepare_samples(dataset.samples, dataset.meta, config.max_len);
  nlohmann::json summary{{"ablation", to_string(config.ablation)},
                         {"best_epoch", result.best_epoch},
                         {"best_val_loss", result.best_val_loss},
                         {"epochs_run", result.logs.size()},
                         {"initial_val_loss", result.initial_val_loss},
                         {"config_fingerprint", config_fingerprint(config)}};
  if (result.initial_val_loss_random) {
    summary["initial_val_loss_random_init"] = *result.initial_val_loss_random;
    summary["initial_val_loss_delta"] = result.initial_val_loss - *result.initial_val_loss_random;
  }
  const std::string name(to_string(config.ablation));
  summary["val"] = fusion::metrics_to_json(name, evaluate_indices(result.model, samples, result.split.val));
  if (result.split.test.size() >= 2)
    summary["test"] = fusion::metrics_to_json(name, evaluate_indices(result.model, samples, result.split.test));
  write_json_file(out / "summary.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_evaluate(const fs::path& checkpoint_path, const fs::path& data_dir, const std::string& split_name,
                 const std::string& model_name, const std::string& json_out) {
  const auto j = read_json_file(checkpoint_path);
  const auto dataset = data::read_dataset(data_dir);
  require_featurization(j, dataset.meta);
  const auto loaded = load_checkpoint(j);
  const auto metrics = evaluate(loaded.model, dataset, parse_split_name(split_name));
  const std::string name = model_name.empty() ? std::string(to_string(loaded.model.config.ablation)) : model_name;
  const std::vector<fusion::ReportRow> rows{{name, metrics}};
  std::cout << fusion::format_metrics_table(rows);
  const auto report = fusion::metrics_to_json(name, metrics);
  std::cout << report.dump() << "\n";
  if (!json_out.empty()) write_json_file(json_out, report);
  return 0;
}

int run_predict(const fs::path& checkpoint_path, const fs::path& complexes_path, const fs::path& fasta_path,
                const fs::path& out) {
  const auto loaded = load_checkpoint(read_json_file(checkpoint_path));
  const auto complexes = data::parse_complex_jsonl(data::read_text(complexes_path), {.require_affinity = false});
  const auto sequences = data::parse_fasta(data::read_text(fasta_path), loaded.model.meta.alphabet);
  const auto run = predict_records(loaded.model, complexes, sequences);
  data::write_text(out, predictions_jsonl(run.predictions));
  for (const auto& id : run.unpaired) std::cerr << "unpaired id: " << id << "\n";
  return run.unpaired.empty() ? 0 : 1;
}

int run_export_curve(const fs::path& log_path, const fs::path& out) {
  const auto logs = parse_epoch_log(data::read_text(log_path));
  data::write_text(out, loss_curve_csv(logs));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bindfuse: protein-ligand binding affinity from complex graphs and sequences"};
  app.require_subcommand(1);

  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string out, config, data_dir, ablation, corpus, alphabet = "amino", checkpoint, split = "test", complexes,
                                                    fasta, log, model_name, json_out;
  data::GeneratorParams gen;
  bool write_split = false;

  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset directory");
  gen_cmd->add_option("--n", n, "Number of samples")->required();
  gen_cmd->add_option("--seed", seed, "Generator seed")->required();
  gen_cmd->add_option("--out", out, "Output directory")->required();
  gen_cmd->add_option("--alpha", gen.alpha, "Degree coefficient");
  gen_cmd->add_option("--beta", gen.beta, "Motif coefficient");
  gen_cmd->add_option("--gamma", gen.gamma, "Interaction coefficient");
  gen_cmd->add_option("--sigma", gen.sigma, "Label noise standard deviation");
  gen_cmd->add_flag("--write-split", write_split, "Also write split.json (70/15/15 from --seed)");

  auto* pre_cmd = app.add_subcommand("pretrain", "MLM pretraining of the sequence encoder");
  pre_cmd->add_option("--config", config, "Config file (key = value)");
  pre_cmd->add_option("--corpus", corpus, "One sequence per line")->required();
  pre_cmd->add_option("--out", out, "Output directory")->required();
  pre_cmd->add_option("--alphabet", alphabet, "amino|nucleotide");

  auto* train_cmd = app.add_subcommand("train", "Supervised training with early stopping");
  train_cmd->add_option("--config", config, "Config file (key = value)");
  train_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  train_cmd->add_option("--out", out, "Output directory")->required();
  train_cmd->add_option("--ablation", ablation, "full|graph_only|seq_only (overrides config)");

  auto* eval_cmd = app.add_subcommand("evaluate", "Metrics of a checkpoint on one split");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint.json")->required();
  eval_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  eval_cmd->add_option("--split", split, "train|val|test");
  eval_cmd->add_option("--name", model_name, "Model name in the report");
  eval_cmd->add_option("--json-out", json_out, "Also write the JSON report here");

  auto* pred_cmd = app.add_subcommand("predict", "Predict affinities for paired records");
  pred_cmd->add_option("--checkpoint", checkpoint, "checkpoint.json")->required();
  pred_cmd->add_option("--complexes", complexes, "Complex JSONL")->required();
  pred_cmd->add_option("--fasta", fasta, "FASTA sequences")->required();
  pred_cmd->add_option("--out", out, "Output JSONL")->required();

  auto* curve_cmd = app.add_subcommand("export-curve", "Loss curve CSV from an epoch log");
  curve_cmd->add_option("--log", log, "epochs.jsonl")->required();
  curve_cmd->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) return gen_data(n, seed, out, gen, write_split);
    if (*pre_cmd) return run_pretrain(config, corpus, out, alphabet);
    if (*train_cmd) return run_train(config, data_dir, out, ablation);
    if (*eval_cmd) return run_evaluate(checkpoint, data_dir, split, model_name, json_out);
    if (*pred_cmd) return run_predict(checkpoint, complexes, fasta, out);
    if (*curve_cmd) return run_export_curve(log, out);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
