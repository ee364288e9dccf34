/*
 * Copyright 2026 The Dualrec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// dualrec: ingest -> train -> augment -> index -> query -> evaluate, plus
// tune and synth. Every artifact gets a `<artifact>.manifest.json`.
//
// Exit codes: 0 success, 2 configuration error, 3 input error, 1 other.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dualrec/augment.hpp"
#include "dualrec/config.hpp"
#include "dualrec/corpus.hpp"
#include "dualrec/eval.hpp"
#include "dualrec/model_io.hpp"
#include "dualrec/retrieval.hpp"
#include "dualrec/sgns.hpp"
#include "dualrec/synth.hpp"
#include "dualrec/text.hpp"
#include "dualrec/tune.hpp"

namespace fs = std::filesystem;
using namespace dualrec;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  Config resolve() const {
    Config config;
    if (!config_file.empty()) config.load(config_file);
    for (const auto& o : overrides) config.set_assignment(o);
    if (seed) config.set("seed", std::to_string(*seed));
    if (threads) config.set("threads", std::to_string(*threads));
    return config;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "key=value configuration file");
  app->add_option("--set", c.overrides, "override one key (key=value), repeatable");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--threads", c.threads, "worker threads (1 = deterministic)");
}

std::string manifest_path(const std::string& artifact) {
  return artifact + ".manifest.json";
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  return out;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  Common common;
  std::string sessions;
  std::string catalog;
  std::string exceptions;
  std::string out;
};

void run_ingest(const IngestArgs& a) {
  const auto config = a.common.resolve();
  auto filter = make_filter_config(config);
  RunManifest manifest("ingest", config);

  const auto loaded = load_sessions(a.sessions);
  manifest.add_input("sessions", a.sessions);
  Catalog catalog;
  if (!a.catalog.empty()) {
    catalog = load_catalog(a.catalog);
    manifest.add_input("catalog", a.catalog);
  } else {
    spdlog::warn("no catalog given; taxonomy rules are skipped");
  }
  if (!a.exceptions.empty()) {
    filter.taxonomy_exception_list = load_exception_list(a.exceptions);
    manifest.add_input("exceptions", a.exceptions);
  }

  SessionSet purchases;
  purchases.sessions = select_channel(loaded.sessions, Channel::kPurchase);
  const auto kept = filter_outliers(purchases, filter);
  const auto built = build_pairs(kept.sessions);
  const auto taxonomy = build_taxonomy_pairs(built.pairs, catalog);
  PairFilterReport report;
  const auto pairs = filter_pairs(built.pairs, catalog, filter, taxonomy, &report);

  {
    auto out = open_output(a.out);
    write_pairs(out, pairs);
  }
  manifest.add_output("pairs", a.out);
  manifest.set_field("sessions_in", purchases.sessions.size());
  manifest.set_field("sessions_kept", kept.sessions.size());
  manifest.set_field("malformed_lines", loaded.malformed_count);
  manifest.set_field("raw_pairs", built.pairs.size());
  manifest.set_field("pairs_kept", pairs.size());
  manifest.set_field("dropped_below_count", report.below_count);
  manifest.set_field("dropped_below_pmi", report.below_pmi);
  manifest.set_field("dropped_identical_taxonomy", report.identical_taxonomy);
  manifest.set_field("dropped_low_taxonomy_pmi", report.low_taxonomy_pmi);
  manifest.write(manifest_path(a.out));
  spdlog::info("wrote {} pairs to {}", pairs.size(), a.out);
}

// ----------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  std::string pairs;
  std::string sessions;
  std::string channel = "click";
  std::string out;
  std::string format = "text";
};

ModelFormat parse_format(const std::string& text) {
  if (text == "text") return ModelFormat::kText;
  if (text == "binary") return ModelFormat::kBinary;
  throw ConfigError("model format must be text or binary");
}

void run_train(const TrainArgs& a) {
  if (a.pairs.empty() == a.sessions.empty()) {
    throw ConfigError("train needs exactly one of --pairs or --sessions");
  }
  const auto config = a.common.resolve();
  const auto cfg = make_train_config(config);
  const auto format = parse_format(a.format);
  RunManifest manifest("train", config);

  const std::string progress_path = a.out + ".progress.tsv";
  auto progress_out = open_output(progress_path);
  progress_out << "epoch\texamples\tmean_loss\tdev_recall_at_20\n";
  const ProgressSink progress = [&](const EpochReport& r) {
    const auto line = format_progress(r);
    progress_out << line << '\n';
    progress_out.flush();
    spdlog::info("epoch {}", line);
  };

  TrainResult result;
  if (!a.pairs.empty()) {
    const auto pairs = load_pairs(a.pairs);
    manifest.add_input("pairs", a.pairs);
    const double dev_fraction = config.get_double("train.dev_fraction");
    if (dev_fraction > 0.0) {
      const auto split = make_dev_split(pairs, dev_fraction, cfg.seed);
      manifest.set_field("dev_pairs", split.dev_pairs.size());
      result = train_pairs(split.train, cfg, make_dev_scorer(split.dev, cfg.threads),
                           progress);
    } else {
      result = train_pairs(pairs, cfg, {}, progress);
    }
  } else {
    const auto channel = parse_channel(a.channel);
    if (!channel) throw ConfigError("channel must be purchase or click");
    const auto loaded = load_sessions(a.sessions);
    manifest.add_input("sessions", a.sessions);
    manifest.set_field("channel", a.channel);
    result = train_sequences(select_channel(loaded.sessions, *channel), cfg, {}, progress);
  }
  progress_out.close();

  save_model(a.out, result.model, format);
  manifest.add_output("model", a.out);
  manifest.add_output("progress", progress_path);
  manifest.set_field("mode", a.pairs.empty() ? "sequence" : "pair");
  manifest.set_field("vocab", result.model.size());
  manifest.set_field("best_epoch", result.best_epoch);
  manifest.set_field("epochs_run", result.history.size());
  manifest.write(manifest_path(a.out));
  spdlog::info("wrote model ({} items, d={}) to {}", result.model.size(),
               result.model.dim(), a.out);
}

// --------------------------------------------------------------- augment

struct AugmentArgs {
  Common common;
  std::string pairs;
  std::string similarity_model;
  std::string catalog;
  std::string exceptions;
  std::string out;
  std::string audit;
};

void run_augment(const AugmentArgs& a) {
  const auto config = a.common.resolve();
  auto filter = make_filter_config(config);
  const auto acfg = make_augment_config(config);
  RunManifest manifest("augment", config);

  const auto real = load_pairs(a.pairs);
  manifest.add_input("pairs", a.pairs);
  for (const auto& r : real.records()) {
    if (r.provenance != Provenance::kReal) {
      throw InputError("augment expects real pairs only; " + a.pairs +
                       " already contains synthetic pairs");
    }
  }
  EmbeddingSimilarity similarity(load_model(a.similarity_model), acfg.threads);
  manifest.add_input("similarity_model", a.similarity_model);

  std::optional<Catalog> catalog;
  std::optional<TaxonomyPairStats> stats;
  std::optional<TaxonomyFilter> taxonomy;
  if (!a.catalog.empty()) {
    catalog = load_catalog(a.catalog);
    manifest.add_input("catalog", a.catalog);
    if (!a.exceptions.empty()) {
      filter.taxonomy_exception_list = load_exception_list(a.exceptions);
      manifest.add_input("exceptions", a.exceptions);
    }
    stats = build_taxonomy_pairs(real, *catalog);
    taxonomy.emplace(TaxonomyFilter{*catalog, *stats, filter});
  } else {
    spdlog::warn("no catalog given; synthetic pairs are not taxonomy-filtered");
  }

  const auto result = augment_dataset(real, similarity, acfg, taxonomy ? &*taxonomy : nullptr);
  {
    auto out = open_output(a.out);
    write_pairs(out, result.dataset);
  }
  const std::string audit_path = a.audit.empty() ? a.out + ".audit.tsv" : a.audit;
  {
    auto out = open_output(audit_path);
    write_audit(out, result);
  }
  manifest.add_output("pairs", a.out);
  manifest.add_output("audit", audit_path);
  manifest.set_field("real_pairs", real.size());
  manifest.set_field("synthetic_pairs", result.audit.size());
  manifest.set_field("real_mass", result.real_mass);
  manifest.set_field("synthetic_mass", result.synthetic_mass);
  manifest.write(manifest_path(a.out));
}

// ----------------------------------------------------------------- index

struct IndexArgs {
  Common common;
  std::string model;
  std::string side = "out";
  std::string out;
};

void run_index(const IndexArgs& a) {
  const auto config = a.common.resolve();
  const auto acfg = make_ann_config(config);
  const auto side = parse_side(a.side);
  RunManifest manifest("index", config);
  const auto model = load_model(a.model);
  manifest.add_input("model", a.model);
  const AnnIndex index(model, side, acfg);
  {
    auto out = open_output(a.out);
    index.save(out, fingerprint_file(a.model));
  }
  manifest.add_output("index", a.out);
  manifest.set_field("side", std::string(to_string(side)));
  manifest.set_field("nodes", index.size());
  manifest.write(manifest_path(a.out));
}

// ----------------------------------------------------------------- query

struct QueryArgs {
  Common common;
  std::string model;
  std::string target;
  std::string variant = "in-out";
  std::size_t k = 20;
  std::string index;
  bool allow_out_in = false;
  std::string similarity_model;
  std::string catalog;
  bool exclude_same_taxonomy = false;
  std::string out;
};

void run_query(const QueryArgs& a) {
  const auto config = a.common.resolve();
  const auto variant = parse_variant(a.variant);
  if (variant == Variant::kOutIn && !a.allow_out_in) {
    throw ConfigError("the out-in variant is disabled; pass --allow-out-in to use it");
  }
  const int threads = static_cast<int>(config.get_int("threads"));
  const auto model = load_model(a.model);

  std::unique_ptr<VectorIndex> index;
  if (!a.index.empty()) {
    std::ifstream in(a.index, std::ios::binary);
    if (!in) throw InputError("cannot open index file: " + a.index);
    index = std::make_unique<AnnIndex>(AnnIndex::load(in, model, fingerprint_file(a.model)));
    if (index->side() != index_side(variant)) {
      throw ConfigError(fmt::format("index {} is {}-side; variant {} needs {}-side",
                                    a.index, to_string(index->side()), a.variant,
                                    to_string(index_side(variant))));
    }
  } else {
    index = std::make_unique<ExactIndex>(model, index_side(variant), threads);
  }

  std::optional<Catalog> catalog;
  QueryOptions options;
  if (a.exclude_same_taxonomy) {
    if (a.catalog.empty()) throw ConfigError("--exclude-same-taxonomy needs --catalog");
    catalog = load_catalog(a.catalog);
    options.exclude_same_taxonomy = &*catalog;
  }

  RecommendationList list;
  if (!a.similarity_model.empty()) {
    if (variant != Variant::kInOut) {
      throw ConfigError("inference augmentation is defined for in-out only");
    }
    const EmbeddingSimilarity similarity(load_model(a.similarity_model), threads);
    list = query_with_ia(a.target, model, similarity, a.k, *index, options);
  } else {
    list = query(model, a.target, variant, a.k, *index, options);
  }
  if (list.proxy) spdlog::info("{} answered through proxy {}", a.target, *list.proxy);

  std::string text;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    text += fmt::format("{}\t{}\t{:.6f}\n", i + 1, list.entries[i].item,
                        list.entries[i].score);
  }
  if (a.out.empty()) {
    std::cout << text;
    return;
  }
  {
    auto out = open_output(a.out);
    out << text;
  }
  RunManifest manifest("query", config);
  manifest.add_input("model", a.model);
  if (!a.index.empty()) manifest.add_input("index", a.index);
  if (!a.similarity_model.empty()) manifest.add_input("similarity_model", a.similarity_model);
  if (catalog) manifest.add_input("catalog", a.catalog);
  manifest.add_output("recommendations", a.out);
  manifest.set_field("target", a.target);
  manifest.set_field("variant", a.variant);
  if (list.proxy) manifest.set_field("proxy", *list.proxy);
  manifest.write(manifest_path(a.out));
}

// -------------------------------------------------------------- evaluate

struct EvaluateArgs {
  Common common;
  std::string model;
  std::string test_sessions;
  std::string catalog;
  std::string pairs;
  std::string train_sessions;
  std::vector<std::string> variants{"in-out"};
  std::vector<std::string> baselines;
  std::string similarity_model;
  std::string out;
};

void run_evaluate(const EvaluateArgs& a) {
  const auto config = a.common.resolve();
  const int threads = static_cast<int>(config.get_int("threads"));
  RunManifest manifest("evaluate", config);
  const auto model = load_model(a.model);
  manifest.add_input("model", a.model);
  const auto test = load_sessions(a.test_sessions);
  manifest.add_input("test_sessions", a.test_sessions);

  GroundTruthOptions gt_options;
  gt_options.min_pair_count = config.get_uint("eval.min_pair_count");
  const auto truth = build_ground_truth(select_channel(test.sessions, Channel::kPurchase),
                                        gt_options);
  const auto split = split_coverage(truth, [&](const ItemId& q) { return model.contains(q); });
  const auto truth_in = truth.subset(split.in_coverage);
  const auto truth_out = truth.subset(split.out_of_coverage);

  std::optional<Catalog> catalog;
  if (!a.catalog.empty()) {
    catalog = load_catalog(a.catalog);
    manifest.add_input("catalog", a.catalog);
  }

  EvalOptions options;
  options.ks = config.get_list("eval.ks");
  options.threads = threads;
  EvalReport report;
  const auto run = [&](const std::string& name, const Recommender& rec) {
    options.model_name = name;
    options.split = "combined";
    auto combined = evaluate(rec, truth, options);
    if (catalog) {
      const auto cov = coverage_report(rec, *catalog, truth, threads);
      for (auto& row : combined.rows) {
        row.product_coverage = cov.product_coverage;
        row.taxonomy_coverage = cov.taxonomy_coverage;
      }
    }
    report.append(combined);
    options.split = "in-coverage";
    report.append(evaluate(rec, truth_in, options));
    options.split = "out-of-coverage";
    report.append(evaluate(rec, truth_out, options));
    if (catalog && truth_out.size() > 0) {
      TaxonomyEvalOptions t;
      t.model_name = name;
      t.threads = threads;
      auto tax = taxonomy_eval(rec, truth_out, *catalog, t);
      for (auto& row : tax.rows) row.split = "out-of-coverage-taxonomy";
      report.append(tax);
    }
  };

  std::vector<std::unique_ptr<ExactIndex>> indexes;
  for (const auto& v : a.variants) {
    const auto variant = parse_variant(v);
    indexes.push_back(std::make_unique<ExactIndex>(model, index_side(variant), threads));
    run(v, make_retrieval_recommender(model, *indexes.back(), variant));
  }

  std::optional<EmbeddingSimilarity> similarity;
  if (!a.similarity_model.empty()) {
    similarity.emplace(load_model(a.similarity_model), threads);
    manifest.add_input("similarity_model", a.similarity_model);
    indexes.push_back(std::make_unique<ExactIndex>(model, MatrixSide::kOutput, threads));
    const auto& out_index = *indexes.back();
    run("in-out+ia", [&](const ItemId& target, std::size_t k) {
      return query_with_ia(target, model, *similarity, k, out_index);
    });
  }

  if (!a.baselines.empty()) {
    if (a.pairs.empty()) throw ConfigError("baselines need --pairs (training pairs)");
    BaselineData data;
    data.pairs = load_pairs(a.pairs);
    manifest.add_input("pairs", a.pairs);
    if (!a.train_sessions.empty()) {
      const auto train = load_sessions(a.train_sessions);
      manifest.add_input("train_sessions", a.train_sessions);
      for (const auto& s : select_channel(train.sessions, Channel::kPurchase)) {
        for (const auto& item : s.items) ++data.item_sales[item];
      }
    } else {
      // Without sessions, sales are approximated by incident pair counts.
      for (const auto& r : data.pairs.records()) {
        if (r.provenance != Provenance::kReal) continue;
        data.item_sales[r.item_a] += r.count;
        data.item_sales[r.item_b] += r.count;
      }
    }
    for (const auto& b : a.baselines) {
      const auto kind = parse_baseline(b);
      run(std::string(to_string(kind)), make_baseline(kind, data, config.get_uint("seed")));
    }
  }

  std::cout << report.to_table();
  if (!a.out.empty()) {
    const std::string jsonl = a.out + ".jsonl";
    const std::string table = a.out + ".txt";
    {
      auto out = open_output(jsonl);
      out << report.to_jsonl();
    }
    {
      auto out = open_output(table);
      out << report.to_table();
    }
    manifest.add_output("report_jsonl", jsonl);
    manifest.add_output("report_table", table);
    manifest.set_field("queries", truth.size());
    manifest.set_field("in_coverage_queries", truth_in.size());
    manifest.set_field("out_of_coverage_queries", truth_out.size());
    manifest.set_field("taxonomy_coverage_definition",
                       "share of catalog taxonomies with at least one covered query item");
    manifest.write(manifest_path(a.out));
  }
}

// ------------------------------------------------------------------ tune

struct TuneArgs {
  Common common;
  std::string pairs;
  std::size_t budget = 20;
  std::string space;
  std::string out;
  std::string best_config;
  int parallel = 1;
};

void run_tune(const TuneArgs& a) {
  auto config = a.common.resolve();
  const auto base = make_train_config(config);
  RunManifest manifest("tune", config);
  const auto pairs = load_pairs(a.pairs);
  manifest.add_input("pairs", a.pairs);
  SearchSpace space;
  if (!a.space.empty()) {
    space = SearchSpace::load(a.space);
    manifest.add_input("space", a.space);
  }
  const auto split = make_dev_split(pairs, config.get_double("tune.dev_fraction"), base.seed);
  auto trial_base = base;
  trial_base.threads = 1;  // trials themselves may run in parallel
  const auto result =
      random_search(space, a.budget, make_dev_objective(split.train, split.dev),
                    trial_base, base.seed, a.parallel);
  {
    auto out = open_output(a.out);
    write_trial_log(out, result);
  }
  manifest.add_output("trial_log", a.out);
  manifest.set_field("budget", a.budget);
  manifest.set_field("best_trial", result.best_index);
  manifest.set_field("best_dev_recall_at_20", result.best_outcome.dev_recall);
  manifest.set_field("dev_pairs", split.dev_pairs.size());
  if (!a.best_config.empty()) {
    config.set("train.negatives", std::to_string(result.best.negatives));
    config.set("train.noise_exponent", fmt::format("{}", result.best.noise_exponent));
    config.set("train.subsample_t", fmt::format("{}", result.best.subsample_t));
    config.set("train.learning_rate", fmt::format("{}", result.best.learning_rate));
    config.set("train.dim", std::to_string(result.best.dim));
    {
      auto out = open_output(a.best_config);
      out << config.to_text();
    }
    manifest.add_output("best_config", a.best_config);
  }
  manifest.write(manifest_path(a.out));
  spdlog::info("best trial {} with dev Recall@20 {:.4f}", result.best_index,
               result.best_outcome.dev_recall);
}

// ----------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  std::string out_dir;
};

void run_synth(const SynthArgs& a) {
  const auto config = a.common.resolve();
  const auto wcfg = make_world_config(config);
  RunManifest manifest("synth", config);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw InputError("cannot create directory " + a.out_dir + ": " + ec.message());

  const auto world = generate_world(wcfg);
  const auto sessions =
      generate_sessions(world, wcfg, static_cast<int>(config.get_int("threads")));
  const auto path = [&](const char* name) { return (fs::path(a.out_dir) / name).string(); };
  const auto emit = [&](const char* name, const auto& writer) {
    const auto p = path(name);
    {
      auto out = open_output(p);
      writer(out);
    }
    manifest.add_output(name, p);
  };
  emit("purchases.tsv", [&](std::ostream& o) { write_sessions(o, sessions.purchases); });
  emit("clicks.tsv", [&](std::ostream& o) { write_sessions(o, sessions.clicks); });
  emit("test_purchases.tsv",
       [&](std::ostream& o) { write_sessions(o, sessions.test_purchases); });
  emit("catalog.tsv", [&](std::ostream& o) { write_catalog(o, world.catalog); });
  emit("truth.tsv", [&](std::ostream& o) { write_truth(o, world.truth); });
  emit("holdout.txt", [&](std::ostream& o) {
    for (const auto& item : world.holdout) o << item << '\n';
  });
  const auto consistency = measure_consistency(world, sessions.purchases);
  manifest.set_field("graph_consistent_cross_pairs", consistency.fraction());
  manifest.write(path("manifest.json"));
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("dualrec"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Complementary item recommendations from dual product embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "sessions -> filtered co-purchase pairs");
  add_common(c_ingest, ingest.common);
  c_ingest->add_option("--sessions", ingest.sessions, "session TSV")->required();
  c_ingest->add_option("--catalog", ingest.catalog, "catalog TSV");
  c_ingest->add_option("--exceptions", ingest.exceptions, "identical-taxonomy exception list");
  c_ingest->add_option("--out", ingest.out, "pairs TSV")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train a dual embedding model");
  add_common(c_train, train.common);
  c_train->add_option("--pairs", train.pairs, "pairs TSV (pair mode)");
  c_train->add_option("--sessions", train.sessions, "session TSV (sequence mode)");
  c_train->add_option("--channel", train.channel, "sequence mode channel")
      ->check(CLI::IsMember({"purchase", "click"}));
  c_train->add_option("--out", train.out, "model file")->required();
  c_train->add_option("--format", train.format, "text or binary")
      ->check(CLI::IsMember({"text", "binary"}));

  AugmentArgs augment;
  auto* c_augment = app.add_subcommand("augment", "add synthetic pairs from item similarity");
  add_common(c_augment, augment.common);
  c_augment->add_option("--pairs", augment.pairs, "real pairs TSV")->required();
  c_augment->add_option("--similarity-model", augment.similarity_model,
                        "click-trained model")->required();
  c_augment->add_option("--catalog", augment.catalog, "catalog TSV");
  c_augment->add_option("--exceptions", augment.exceptions, "identical-taxonomy exception list");
  c_augment->add_option("--out", augment.out, "augmented pairs TSV")->required();
  c_augment->add_option("--audit", augment.audit, "audit TSV (default <out>.audit.tsv)");

  IndexArgs index;
  auto* c_index = app.add_subcommand("index", "build an approximate nearest neighbour index");
  add_common(c_index, index.common);
  c_index->add_option("--model", index.model, "model file")->required();
  c_index->add_option("--side", index.side, "in or out")->check(CLI::IsMember({"in", "out"}));
  c_index->add_option("--out", index.out, "index file")->required();

  QueryArgs query_args;
  auto* c_query = app.add_subcommand("query", "top-K recommendations for one item");
  add_common(c_query, query_args.common);
  c_query->add_option("--model", query_args.model, "model file")->required();
  c_query->add_option("--target", query_args.target, "item id")->required();
  c_query->add_option("--variant", query_args.variant, "in-out, in-in, out-out, out-in");
  c_query->add_option("--k", query_args.k, "number of candidates");
  c_query->add_option("--index", query_args.index, "ANN index (default: exact search)");
  c_query->add_flag("--allow-out-in", query_args.allow_out_in, "enable the out-in variant");
  c_query->add_option("--similarity-model", query_args.similarity_model,
                      "enables inference augmentation for unknown targets");
  c_query->add_option("--catalog", query_args.catalog, "catalog TSV");
  c_query->add_flag("--exclude-same-taxonomy", query_args.exclude_same_taxonomy,
                    "drop candidates sharing the target's taxonomy");
  c_query->add_option("--out", query_args.out, "write here (with manifest) instead of stdout");

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "precision/recall/coverage on test sessions");
  add_common(c_eval, eval.common);
  c_eval->add_option("--model", eval.model, "model file")->required();
  c_eval->add_option("--test-sessions", eval.test_sessions, "test session TSV")->required();
  c_eval->add_option("--catalog", eval.catalog, "catalog TSV (enables coverage)");
  c_eval->add_option("--pairs", eval.pairs, "training pairs (baselines)");
  c_eval->add_option("--train-sessions", eval.train_sessions, "training sessions (sales)");
  c_eval->add_option("--variants", eval.variants, "retrieval variants")->delimiter(',');
  c_eval->add_option("--baselines", eval.baselines, "top_sellers, co_purchases, random")
      ->delimiter(',');
  c_eval->add_option("--similarity-model", eval.similarity_model,
                     "adds an in-out+ia row");
  c_eval->add_option("--out", eval.out, "report prefix (.jsonl, .txt)");

  TuneArgs tune;
  auto* c_tune = app.add_subcommand("tune", "random hyperparameter search");
  add_common(c_tune, tune.common);
  c_tune->add_option("--pairs", tune.pairs, "pairs TSV")->required();
  c_tune->add_option("--budget", tune.budget, "number of trials");
  c_tune->add_option("--space", tune.space, "search space file");
  c_tune->add_option("--out", tune.out, "trial log (JSON lines)")->required();
  c_tune->add_option("--best-config", tune.best_config, "write the best config here");
  c_tune->add_option("--parallel", tune.parallel, "trials run at once");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic world");
  add_common(c_synth, synth.common);
  c_synth->add_option("--out-dir", synth.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto level = spdlog::level::from_str(log_level);
    if (level == spdlog::level::off && log_level != "off") {
      throw ConfigError("unknown log level " + log_level);
    }
    spdlog::set_level(level);
    if (*c_ingest) run_ingest(ingest);
    if (*c_train) run_train(train);
    if (*c_augment) run_augment(augment);
    if (*c_index) run_index(index);
    if (*c_query) run_query(query_args);
    if (*c_eval) run_evaluate(eval);
    if (*c_tune) run_tune(tune);
    if (*c_synth) run_synth(synth);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return 2;
  } catch (const InputError& e) {
    spdlog::error("input error: {}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
