// Command-line front end for the feature pipeline, LSA, pretraining and
// network training. Subcommands write their artifacts into --out and exit
// 0 on success, 1 on usage/config problems, 2 on data problems, 3 on
// numeric failures.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nimbus/config.hpp"
#include "nimbus/csv.hpp"
#include "nimbus/error.hpp"
#include "nimbus/harness.hpp"
#include "nimbus/lsa.hpp"
#include "nimbus/model_io.hpp"
#include "nimbus/neural.hpp"
#include "nimbus/optim.hpp"
#include "nimbus/pretrain.hpp"
#include "nimbus/textfeat.hpp"

namespace {

namespace fs = std::filesystem;
using nimbus::ConfigError;
using nimbus::DataError;

std::string out_path(const std::string& out_dir, const char* name) {
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / name).string();
}

nimbus::harness::RunConfig load_run_config(const std::string& config_path,
                                           const CLI::Option* seed_opt, std::uint64_t seed) {
  nimbus::harness::RunConfig config;
  if (!config_path.empty()) {
    config = nimbus::harness::RunConfig::from_key_values(
        nimbus::config::KeyValues::parse_file(config_path));
  }
  if (seed_opt->count() > 0) config.seed = seed;
  return config;
}

// One tagged message: token_POS items split on the last underscore. Lines
// that do not parse as tagged text fall back to the naive tokenizer.
std::vector<std::pair<std::string, std::string>> message_from_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> message;
  std::istringstream tokens(text);
  std::string item;
  while (tokens >> item) {
    const std::size_t underscore = item.rfind('_');
    if (underscore == std::string::npos || underscore == 0 || underscore + 1 == item.size()) {
      return nimbus::textfeat::tokenize_fallback(text);
    }
    message.emplace_back(item.substr(0, underscore), item.substr(underscore + 1));
  }
  return message;
}

struct FeaturizeArgs {
  std::string corpus;
  std::string labels;
  std::string lexicon;
  std::string stoplist;
  std::uint64_t threshold = 5;
  std::string out;
};

int run_featurize(const FeaturizeArgs& args) {
  if (args.corpus.empty() == args.labels.empty()) {
    throw ConfigError("featurize needs exactly one of --corpus or --labels");
  }
  const nimbus::textfeat::Lexicon lexicon = nimbus::textfeat::Lexicon::load(args.lexicon);
  nimbus::textfeat::Stoplist stoplist;
  if (!args.stoplist.empty()) stoplist = nimbus::textfeat::load_stoplist(args.stoplist);

  std::vector<std::vector<std::pair<std::string, std::string>>> raw_messages;
  std::vector<nimbus::harness::DatasetRecord> records;
  if (!args.corpus.empty()) {
    raw_messages = nimbus::textfeat::load_tagged_corpus(args.corpus);
  } else {
    records = nimbus::harness::load_labeled_csv(args.labels);
    for (const auto& record : records) {
      if (!record.text) {
        throw DataError("labeled csv must carry a 'tweet' column for featurization");
      }
      raw_messages.push_back(message_from_text(*record.text));
    }
  }

  std::vector<std::vector<nimbus::textfeat::TokenTag>> prepared;
  prepared.reserve(raw_messages.size());
  for (const auto& raw : raw_messages) {
    prepared.push_back(nimbus::textfeat::prepare_message(raw, stoplist, lexicon));
  }

  const nimbus::textfeat::BagOfWords full_bag = nimbus::textfeat::build_bag(prepared);
  const nimbus::textfeat::PruneResult pruned =
      nimbus::textfeat::prune_bag(full_bag, lexicon, args.threshold);

  std::vector<nimbus::textfeat::SparseBinaryVector> vectors;
  vectors.reserve(prepared.size());
  for (const auto& message : prepared) {
    vectors.push_back(
        nimbus::textfeat::vectorize(message, pruned.kept, pruned.conversions));
  }

  nimbus::textfeat::save_bag(pruned.kept, out_path(args.out, "bag.tsv"));
  nimbus::textfeat::save_conversions(pruned.conversions,
                                     out_path(args.out, "conversions.tsv"));
  nimbus::lsa::save_sparse_matrix(nimbus::lsa::from_binary_vectors(vectors),
                                  out_path(args.out, "vectors.smat"));

  if (!records.empty()) {
    // Re-emit the labels with features_ref pointing at vectors.smat rows.
    std::vector<std::string> header{"id", "features_ref"};
    const auto& names = nimbus::harness::target_column_names();
    header.insert(header.end(), names.begin(), names.end());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < records.size(); ++i) {
      std::vector<std::string> row{records[i].id, std::to_string(i)};
      for (Eigen::Index t = 0; t < records[i].targets.size(); ++t) {
        row.push_back(nimbus::csv::format_double(records[i].targets[t]));
      }
      rows.push_back(std::move(row));
    }
    nimbus::csv::write_csv(out_path(args.out, "labels_featurized.csv"), header, rows);
  }

  std::cout << "bag " << pruned.kept.size() << " pairs, conversions "
            << pruned.conversions.size() << ", vectors " << vectors.size() << "\n";
  return 0;
}

struct LsaFitArgs {
  std::string matrix;
  long k = 0;  // 0 = min(1000, max rank)
  int power_iters = 4;
  int oversample = 10;
  std::uint64_t seed = 0;
  std::string out;
};

int run_lsa_fit(const LsaFitArgs& args) {
  const nimbus::lsa::SparseMatrix x = nimbus::lsa::load_sparse_matrix(args.matrix);
  const nimbus::lsa::TfIdfModel tfidf = nimbus::lsa::TfIdfModel::fit(x);
  const nimbus::lsa::SparseMatrix weighted = nimbus::lsa::apply_tfidf(tfidf, x);
  long k = args.k;
  const long max_rank = std::min(x.rows(), x.cols());
  if (k == 0) k = std::min<long>(1000, max_rank);
  nimbus::lsa::SvdOptions options;
  options.power_iters = args.power_iters;
  options.oversample = args.oversample;
  const nimbus::lsa::LsaModel model =
      nimbus::lsa::fit_truncated_svd(weighted, static_cast<int>(k), args.seed, options);
  nimbus::model_io::save_tfidf(tfidf, out_path(args.out, "tfidf.model"));
  nimbus::model_io::save_lsa(model, out_path(args.out, "lsa.model"));
  std::cout << "rank " << model.k() << ", top singular value "
            << nimbus::csv::format_double(model.singular_values[0]) << "\n";
  return 0;
}

struct LsaTransformArgs {
  std::string matrix;
  std::string tfidf;
  std::string lsa;
  bool standardize = false;
  std::string out;
};

int run_lsa_transform(const LsaTransformArgs& args) {
  const nimbus::lsa::SparseMatrix x = nimbus::lsa::load_sparse_matrix(args.matrix);
  const nimbus::lsa::TfIdfModel tfidf = nimbus::model_io::load_tfidf(args.tfidf);
  const nimbus::lsa::LsaModel model = nimbus::model_io::load_lsa(args.lsa);
  Eigen::MatrixXd features =
      nimbus::lsa::project_rows(model, nimbus::lsa::apply_tfidf(tfidf, x));
  if (args.standardize) {
    features = nimbus::lsa::Standardizer::fit(features).apply(features);
  }
  nimbus::model_io::save_dense_matrix(features, out_path(args.out, "features.dmat"));
  std::cout << "projected " << features.rows() << " rows to " << features.cols()
            << " dims\n";
  return 0;
}

struct PretrainArgs {
  std::string features;
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

int run_pretrain(const PretrainArgs& args, const CLI::Option* seed_opt) {
  const nimbus::harness::RunConfig config =
      load_run_config(args.config, seed_opt, args.seed);
  const Eigen::MatrixXd data = nimbus::model_io::load_dense_matrix(args.features);
  std::vector<int> sizes{static_cast<int>(data.cols())};
  std::vector<nimbus::pretrain::CdConfig> cd;
  for (int i = 0; i < config.hidden_layers; ++i) {
    sizes.push_back(config.hidden_units);
    cd.push_back(i == 0 ? config.gaussian_cd : config.bernoulli_cd);
  }
  const std::vector<nimbus::pretrain::Rbm> rbms =
      nimbus::pretrain::greedy_pretrain(sizes, data, cd, config.seed);
  nimbus::model_io::save_rbm_stack(rbms, out_path(args.out, "rbms.model"));
  for (std::size_t i = 0; i < rbms.size(); ++i) {
    std::cout << "layer " << i << " (" << nimbus::pretrain::to_string(rbms[i].visible_type)
              << ") reconstruction mse "
              << nimbus::csv::format_double(
                     nimbus::pretrain::reconstruction_error(rbms[i], data))
              << "\n";
    break;  // the first layer is the only one whose input we still hold
  }
  return 0;
}

struct TrainArgs {
  std::string labels;
  std::string features;
  std::string config;
  std::string rbms;
  std::uint64_t seed = 0;
  std::string out;
};

int run_train(const TrainArgs& args, const CLI::Option* seed_opt) {
  const nimbus::harness::RunConfig config =
      load_run_config(args.config, seed_opt, args.seed);
  const auto records = nimbus::harness::load_labeled_csv(args.labels);
  const Eigen::MatrixXd all_features = nimbus::model_io::load_dense_matrix(args.features);
  const Eigen::MatrixXd x = nimbus::harness::gather_features(records, all_features);
  const Eigen::MatrixXd t = nimbus::harness::gather_targets(records);

  std::vector<nimbus::pretrain::Rbm> stack;
  const std::vector<nimbus::pretrain::Rbm>* stack_ptr = nullptr;
  if (!args.rbms.empty()) {
    stack = nimbus::model_io::load_rbm_stack(args.rbms);
    stack_ptr = &stack;
  }

  std::ofstream epochs_out(out_path(args.out, "epochs.csv"));
  if (!epochs_out) throw DataError("cannot write epochs.csv under " + args.out);
  nimbus::harness::write_epochs_header(epochs_out);
  const nimbus::harness::TrainResult result = nimbus::harness::train_network(
      config, x, t,
      [&epochs_out](const nimbus::harness::EpochStat& stat) {
        nimbus::harness::append_epoch_row(epochs_out, stat);
      },
      stack_ptr);

  nimbus::model_io::save_network(result.network, out_path(args.out, "network.model"));
  nimbus::harness::write_classifiers_csv(out_path(args.out, "classifiers.csv"), config.head,
                                         result.report.validation_errors);
  std::cout << "best epoch " << result.report.best_epoch << ", validation rmse "
            << nimbus::csv::format_double(result.report.best_val_rmse) << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string labels;
  std::string features;
  std::string model;
  std::string out;
};

int run_evaluate(const EvaluateArgs& args) {
  const auto records = nimbus::harness::load_labeled_csv(args.labels);
  const Eigen::MatrixXd all_features = nimbus::model_io::load_dense_matrix(args.features);
  const Eigen::MatrixXd x = nimbus::harness::gather_features(records, all_features);
  const Eigen::MatrixXd t = nimbus::harness::gather_targets(records);
  const nimbus::neural::Network net = nimbus::model_io::load_network(args.model);
  const nimbus::harness::Evaluation evaluation = nimbus::harness::evaluate(net, x, t);

  nimbus::harness::write_classifiers_csv(out_path(args.out, "classifiers.csv"), net.head,
                                         evaluation.errors);
  std::ofstream metrics(out_path(args.out, "metrics.txt"));
  metrics << "rmse " << nimbus::csv::format_double(evaluation.rmse) << "\n";
  std::cout << "rmse " << nimbus::csv::format_double(evaluation.rmse) << "\n";
  return 0;
}

struct CompareArgs {
  std::string labels;
  std::string features;
  std::string config;
  std::uint64_t seed = 0;
  int epochs = 30;
  std::string out;
};

int run_compare(const CompareArgs& args, const CLI::Option* seed_opt) {
  const nimbus::harness::RunConfig config =
      load_run_config(args.config, seed_opt, args.seed);
  const auto records = nimbus::harness::load_labeled_csv(args.labels);
  const Eigen::MatrixXd all_features = nimbus::model_io::load_dense_matrix(args.features);
  const Eigen::MatrixXd x = nimbus::harness::gather_features(records, all_features);
  const Eigen::MatrixXd t = nimbus::harness::gather_targets(records);

  const std::vector<nimbus::optim::Rule> rules{
      nimbus::optim::Rule::kSgd, nimbus::optim::Rule::kCm, nimbus::optim::Rule::kNag};
  const auto traces = nimbus::harness::compare_optimizers(config, x, t, rules, args.epochs);

  std::vector<std::string> header{"epoch"};
  for (const auto& trace : traces) header.push_back(nimbus::optim::to_string(trace.rule));
  std::vector<std::vector<std::string>> rows;
  for (int epoch = 0; epoch < args.epochs; ++epoch) {
    std::vector<std::string> row{std::to_string(epoch + 1)};
    for (const auto& trace : traces) {
      row.push_back(nimbus::csv::format_double(
          trace.train_rmse[static_cast<std::size_t>(epoch)]));
    }
    rows.push_back(std::move(row));
  }
  nimbus::csv::write_csv(out_path(args.out, "optimizers.csv"), header, rows);
  for (const auto& trace : traces) {
    std::cout << nimbus::optim::to_string(trace.rule) << " final train rmse "
              << nimbus::csv::format_double(trace.train_rmse.back()) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-to-label pipeline: featurization, LSA, RBM pretraining and "
               "network training"};
  app.require_subcommand(1);

  FeaturizeArgs featurize;
  CLI::App* featurize_cmd =
      app.add_subcommand("featurize", "build bag, conversions and feature vectors");
  featurize_cmd->add_option("--corpus", featurize.corpus, "tagged corpus, one message per line");
  featurize_cmd->add_option("--labels", featurize.labels, "labeled csv with a tweet column");
  featurize_cmd->add_option("--lexicon", featurize.lexicon, "lexicon file")->required();
  featurize_cmd->add_option("--stoplist", featurize.stoplist, "stop word list");
  featurize_cmd->add_option("--threshold", featurize.threshold, "prune counts <= threshold");
  featurize_cmd->add_option("--out", featurize.out, "output directory")->required();

  LsaFitArgs lsa_fit;
  CLI::App* lsa_fit_cmd = app.add_subcommand("lsa-fit", "fit tf-idf and truncated svd");
  lsa_fit_cmd->add_option("--matrix", lsa_fit.matrix, "sparse feature matrix")->required();
  lsa_fit_cmd->add_option("--k", lsa_fit.k, "target rank (0 = min(1000, max))");
  lsa_fit_cmd->add_option("--power-iters", lsa_fit.power_iters, "subspace iterations");
  lsa_fit_cmd->add_option("--oversample", lsa_fit.oversample, "sketch oversampling");
  const CLI::Option* lsa_seed = lsa_fit_cmd->add_option("--seed", lsa_fit.seed, "rng seed");
  lsa_fit_cmd->add_option("--out", lsa_fit.out, "output directory")->required();
  (void)lsa_seed;

  LsaTransformArgs lsa_transform;
  CLI::App* lsa_transform_cmd =
      app.add_subcommand("lsa-transform", "project a sparse matrix into the lsa space");
  lsa_transform_cmd->add_option("--matrix", lsa_transform.matrix, "sparse feature matrix")
      ->required();
  lsa_transform_cmd->add_option("--tfidf", lsa_transform.tfidf, "tfidf model")->required();
  lsa_transform_cmd->add_option("--lsa", lsa_transform.lsa, "lsa model")->required();
  lsa_transform_cmd->add_flag("--standardize", lsa_transform.standardize,
                              "zero-mean/unit-variance per output dimension");
  lsa_transform_cmd->add_option("--out", lsa_transform.out, "output directory")->required();

  PretrainArgs pretrain;
  CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "greedy layer-wise rbm training");
  pretrain_cmd->add_option("--features", pretrain.features, "dense feature matrix")
      ->required();
  pretrain_cmd->add_option("--config", pretrain.config, "run config file");
  const CLI::Option* pretrain_seed =
      pretrain_cmd->add_option("--seed", pretrain.seed, "rng seed (overrides config)");
  pretrain_cmd->add_option("--out", pretrain.out, "output directory")->required();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train a network configuration");
  train_cmd->add_option("--labels", train.labels, "labeled csv (features_ref)")->required();
  train_cmd->add_option("--features", train.features, "dense feature matrix")->required();
  train_cmd->add_option("--config", train.config, "run config file");
  train_cmd->add_option("--rbms", train.rbms, "pretrained rbm stack (dbn model)");
  const CLI::Option* train_seed =
      train_cmd->add_option("--seed", train.seed, "rng seed (overrides config)");
  train_cmd->add_option("--out", train.out, "output directory")->required();

  EvaluateArgs evaluate;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a trained network");
  evaluate_cmd->add_option("--labels", evaluate.labels, "labeled csv (features_ref)")
      ->required();
  evaluate_cmd->add_option("--features", evaluate.features, "dense feature matrix")
      ->required();
  evaluate_cmd->add_option("--model", evaluate.model, "network model file")->required();
  evaluate_cmd->add_option("--out", evaluate.out, "output directory")->required();

  CompareArgs compare;
  CLI::App* compare_cmd =
      app.add_subcommand("compare-optimizers", "trace sgd/cm/nag from one initialization");
  compare_cmd->add_option("--labels", compare.labels, "labeled csv (features_ref)")
      ->required();
  compare_cmd->add_option("--features", compare.features, "dense feature matrix")
      ->required();
  compare_cmd->add_option("--config", compare.config, "run config file");
  const CLI::Option* compare_seed =
      compare_cmd->add_option("--seed", compare.seed, "rng seed (overrides config)");
  compare_cmd->add_option("--epochs", compare.epochs, "epochs per rule");
  compare_cmd->add_option("--out", compare.out, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (featurize_cmd->parsed()) return run_featurize(featurize);
    if (lsa_fit_cmd->parsed()) return run_lsa_fit(lsa_fit);
    if (lsa_transform_cmd->parsed()) return run_lsa_transform(lsa_transform);
    if (pretrain_cmd->parsed()) return run_pretrain(pretrain, pretrain_seed);
    if (train_cmd->parsed()) return run_train(train, train_seed);
    if (evaluate_cmd->parsed()) return run_evaluate(evaluate);
    if (compare_cmd->parsed()) return run_compare(compare, compare_seed);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const nimbus::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const nimbus::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const nimbus::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
}
