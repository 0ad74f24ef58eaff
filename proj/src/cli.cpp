#include "embedlayout/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>

#include "CLI11.hpp"
#include "embedlayout/bench.hpp"
#include "embedlayout/embed.hpp"
#include "embedlayout/graph.hpp"
#include "embedlayout/layout.hpp"
#include "embedlayout/metrics.hpp"
#include "embedlayout/neural.hpp"
#include "embedlayout/render.hpp"
#include "embedlayout/rng.hpp"
#include "embedlayout/walks.hpp"
#include "io_util.hpp"

namespace embedlayout {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutDirEnv = "EMBEDLAYOUT_OUT_DIR";

void add_walk_options(CLI::App* app, WalkConfig& cfg) {
  app->add_option("--walk-length", cfg.walk_length, "Steps per random walk")->check(CLI::PositiveNumber);
  app->add_option("--walks-per-node", cfg.walks_per_node, "Walks started from every node")
      ->check(CLI::PositiveNumber);
}

void add_skipgram_options(CLI::App* app, SkipGramConfig& cfg) {
  app->add_option("--dim", cfg.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  app->add_option("--window", cfg.window, "Skip-gram window")->check(CLI::PositiveNumber);
  app->add_option("--negatives", cfg.negatives, "Negative samples per pair")->check(CLI::PositiveNumber);
  app->add_option("--epochs", cfg.epochs, "Passes over the walk corpus")->check(CLI::PositiveNumber);
  app->add_option("--embed-lr", cfg.learning_rate, "Initial skip-gram learning rate")
      ->check(CLI::PositiveNumber);
}

void add_optimizer_options(CLI::App* app, OptimizerConfig& cfg) {
  app->add_option("--iterations", cfg.iterations, "SGD iterations")->check(CLI::PositiveNumber);
  const std::map<std::string, UpdateRule> rules = {{"pairwise", UpdateRule::pairwise},
                                                   {"gradient", UpdateRule::gradient}};
  app->add_option("--rule", cfg.rule, "Update rule: pairwise or gradient")
      ->transform(CLI::CheckedTransformer(rules, CLI::ignore_case));
  app->add_option("--final-step", cfg.final_step, "pairwise rule: last-iteration step fraction")
      ->check(CLI::Range(1e-12, 1.0));
  app->add_option("--lr", cfg.learning_rate, "gradient rule: initial step size")->check(CLI::PositiveNumber);
  app->add_option("--batch", cfg.batch_size, "Pairs sampled per iteration")->check(CLI::PositiveNumber);
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

Graph load_graph(const std::string& path) {
  if (fs::path(path).extension() == ".json") return graph_from_json(detail::read_file(path));
  return read_edge_list(path);
}

Layout load_any_layout(const std::string& path) {
  if (fs::path(path).extension() == ".json") return layout_from_json(detail::read_file(path));
  return load_layout(path);
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    detail::write_file(path, text);
  }
}

char format_suffix(const std::string& path) { return fs::path(path).extension() == ".json" ? 'j' : 't'; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding-driven graph layout: random walks, skip-gram, cosine stress SGD, "
               "scale-normalized stress, and a residual MLP layout predictor"};
  app.name(args.empty() ? "embedlayout" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed")->capture_default_str(); };

  // gen
  auto* gen = app.add_subcommand("gen", "Generate Erdos-Renyi graphs as edge-list files");
  std::size_t gen_n = 0, gen_count = 1;
  double gen_p = 0.0;
  std::string gen_out, gen_format = "txt";
  gen->add_option("--n", gen_n, "Node count")->required()->check(CLI::PositiveNumber);
  gen->add_option("--p", gen_p, "Edge probability")->required()->check(CLI::Range(0.0, 1.0));
  gen->add_option("--count", gen_count, "Number of graphs")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--format", gen_format, "txt or json")->check(CLI::IsMember({"txt", "json"}));
  add_seed(gen);

  // embed
  auto* embed = app.add_subcommand("embed", "Random walks + skip-gram embedding of one graph");
  std::string embed_graph, embed_out, embed_corpus, embed_dissim;
  WalkConfig embed_walks;
  SkipGramConfig embed_sg;
  embed->add_option("--graph", embed_graph, "Input graph (edge list or .json)")->required();
  embed->add_option("--out", embed_out, "Embedding output; context vectors go to <out>.ctx")->required();
  embed->add_option("--corpus-out", embed_corpus, "Also write the walk corpus here");
  embed->add_option("--dissimilarity-out", embed_dissim, "Also write the cosine dissimilarity matrix here");
  add_walk_options(embed, embed_walks);
  add_skipgram_options(embed, embed_sg);
  add_seed(embed);

  // layout
  auto* layout = app.add_subcommand("layout", "Compute a layout");
  std::string layout_graph, layout_out, layout_method = "word2vec", layout_model, layout_trace;
  Word2VecLayoutConfig layout_cfg;
  layout->add_option("--graph", layout_graph, "Input graph")->required();
  layout->add_option("--out", layout_out, "Layout output (.json for JSON)")->required();
  layout->add_option("--method", layout_method, "word2vec, sp_sgd, neural or random")
      ->check(CLI::IsMember({"word2vec", "sp_sgd", "neural", "random"}));
  layout->add_option("--model", layout_model, "Model checkpoint for the neural method");
  layout->add_option("--trace-out", layout_trace, "Write the loss trace here (SGD methods)");
  add_walk_options(layout, layout_cfg.walks);
  add_skipgram_options(layout, layout_cfg.skipgram);
  add_optimizer_options(layout, layout_cfg.optimizer);
  add_seed(layout);

  // eval
  auto* eval = app.add_subcommand("eval", "Stress report of a layout against shortest-path distances");
  std::string eval_graph, eval_layout, eval_id, eval_method = "unknown", eval_out;
  double eval_p = std::numeric_limits<double>::quiet_NaN();
  eval->add_option("--graph", eval_graph, "Input graph")->required();
  eval->add_option("--layout", eval_layout, "Layout file")->required();
  eval->add_option("--graph-id", eval_id, "graph_id column (default: graph file stem)");
  eval->add_option("--p", eval_p, "p column");
  eval->add_option("--method", eval_method, "method column");
  eval->add_option("--out", eval_out, "CSV output (default: stdout)");

  // render
  auto* render = app.add_subcommand("render", "Render a layout as SVG");
  std::string render_graph, render_layout, render_out;
  RenderStyle style;
  render->add_option("--graph", render_graph, "Input graph")->required();
  render->add_option("--layout", render_layout, "Layout file")->required();
  render->add_option("--out", render_out, "SVG output")->required();
  render->add_option("--canvas", style.canvas, "Canvas side in pixels");
  render->add_option("--radius", style.node_radius, "Node radius");
  render->add_option("--stroke", style.stroke_width, "Edge stroke width");
  render->add_option("--margin", style.margin, "Margin");
  render->add_flag("--labels", style.labels, "Draw node indices");

  // bench
  auto* bench = app.add_subcommand("bench", "Run the benchmark grid and write a CSV summary");
  BenchSpec spec;
  std::vector<std::string> bench_methods{"word2vec", "sp_sgd", "random"};
  std::string bench_out, bench_grid, bench_model;
  std::size_t grid_columns = 5;
  bool no_timing = false;
  bench->add_option("--n", spec.node_sizes, "Node sizes")->expected(1, -1);
  bench->add_option("--p", spec.edge_probabilities, "Edge probabilities")->expected(1, -1);
  bench->add_option("--instances", spec.instances, "Instances per cell")->check(CLI::PositiveNumber);
  bench->add_option("--methods", bench_methods, "Methods: word2vec sp_sgd random neural")
      ->expected(1, -1)
      ->check(CLI::IsMember({"word2vec", "sp_sgd", "random", "neural"}));
  bench->add_option("--model", bench_model, "Model checkpoint for the neural method");
  bench->add_option("--out", bench_out, "CSV output (default: $" + std::string(kOutDirEnv) +
                                            "/bench.csv, else stdout)");
  bench->add_option("--grid", bench_grid, "Also render retained layouts to this SVG");
  bench->add_option("--grid-instances", spec.keep_layouts, "Instances per cell and method to render");
  bench->add_option("--grid-columns", grid_columns, "Columns of the rendered grid")->check(CLI::PositiveNumber);
  bench->add_option("--threads", spec.threads, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_flag("--no-timing", no_timing, "Report mean_time_s as 0 for byte-reproducible output");
  add_walk_options(bench, spec.word2vec.walks);
  add_skipgram_options(bench, spec.word2vec.skipgram);
  add_optimizer_options(bench, spec.word2vec.optimizer);
  add_seed(bench);

  // train
  auto* train = app.add_subcommand("train", "Train the residual MLP layout predictor");
  TrainConfig tcfg;
  tcfg.model.depth = 8;
  GraphFamily family;
  std::string train_out, train_trace;
  train->add_option("--out", train_out, "Model checkpoint output")->required();
  train->add_option("--trace-out", train_trace, "Validation trace CSV (step,mean_val_sns)");
  train->add_option("--sizes", family.node_sizes, "Training node sizes")->expected(1, -1);
  train->add_option("--p", family.edge_probabilities, "Training edge probabilities")->expected(1, -1);
  train->add_option("--depth", tcfg.model.depth, "Residual blocks");
  train->add_option("--width", tcfg.model.hidden_width, "Hidden width")->check(CLI::PositiveNumber);
  train->add_option("--dropout", tcfg.model.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.99));
  train->add_option("--steps", tcfg.steps, "Training steps")->check(CLI::PositiveNumber);
  train->add_option("--graphs-per-step", tcfg.graphs_per_step, "Graphs per step")->check(CLI::PositiveNumber);
  train->add_option("--eval-every", tcfg.eval_every, "Steps between validations")->check(CLI::PositiveNumber);
  train->add_option("--patience", tcfg.patience, "Validations without improvement before stopping (0 = off)");
  train->add_option("--lr", tcfg.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  train->add_option("--train-graphs", tcfg.train_graphs, "Training pool size")->check(CLI::PositiveNumber);
  train->add_option("--validation-graphs", tcfg.validation_graphs, "Validation split size")
      ->check(CLI::PositiveNumber);
  add_walk_options(train, tcfg.walks);
  add_skipgram_options(train, tcfg.skipgram);
  add_seed(train);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("embedlayout");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      fs::create_directories(gen_out);
      for (std::size_t i = 0; i < gen_count; ++i) {
        const Graph g = generate_er(gen_n, gen_p, derive_seed(seed, {i}));
        char name[64];
        std::snprintf(name, sizeof name, "graph_%04zu.%s", i, gen_format.c_str());
        const auto path = fs::path(gen_out) / name;
        if (gen_format == "json") {
          detail::write_file(path, graph_to_json(g));
        } else {
          write_edge_list(g, path);
        }
      }
    } else if (*embed) {
      const Graph g = load_graph(embed_graph);
      const auto corpus = generate_walks(g, embed_walks, derive_seed(seed, {1}));
      const auto e = train_skipgram(corpus, g.node_count(), embed_sg, derive_seed(seed, {2}));
      save_embedding(e, embed_out);
      if (!embed_corpus.empty()) detail::write_file(embed_corpus, format_corpus(corpus));
      if (!embed_dissim.empty()) {
        const auto d = cosine_dissimilarity(e);
        std::vector<double> flat;
        for (std::size_t i = 0; i < d.size(); ++i) {
          for (std::size_t j = 0; j < d.size(); ++j) flat.push_back(d.at(i, j));
        }
        detail::write_file(embed_dissim, format_matrix_rows(d.size(), d.size(), flat));
      }
    } else if (*layout) {
      const Graph g = load_graph(layout_graph);
      Layout x;
      std::vector<double> trace;
      const Method method = parse_method(layout_method);
      if (method == Method::word2vec) {
        auto r = word2vec_layout(g, layout_cfg, seed);
        x = std::move(r.layout);
        trace = std::move(r.loss_trace);
      } else if (method == Method::sp_sgd) {
        auto r = sp_sgd_layout(g, layout_cfg.optimizer, derive_seed(seed, {3}));
        x = std::move(r.layout);
        trace = std::move(r.loss_trace);
      } else if (method == Method::random) {
        x = random_layout(g.node_count(), seed);
      } else {
        if (layout_model.empty()) {
          err << "layout: --model is required for the neural method\n";
          return 1;
        }
        const auto model = load_model(layout_model);
        x = predict_with_timing(model, g, layout_cfg.walks, layout_cfg.skipgram, seed).layout;
      }
      if (format_suffix(layout_out) == 'j') {
        detail::write_file(layout_out, layout_to_json(x));
      } else {
        save_layout(x, layout_out);
      }
      if (!layout_trace.empty()) {
        std::string text = "epoch,loss\n";
        for (std::size_t i = 0; i < trace.size(); ++i) {
          text += std::to_string(i) + "," + detail::format_double(trace[i]) + "\n";
        }
        detail::write_file(layout_trace, text);
      }
    } else if (*eval) {
      const Graph g = load_graph(eval_graph);
      const Layout x = load_any_layout(eval_layout);
      const auto report = evaluate_layout(x, bfs_all_pairs(g));
      const std::string id = eval_id.empty() ? stem_of(eval_graph) : eval_id;
      std::string text = std::string(kStressReportCsvHeader) + "\n" +
                         stress_report_csv_row(id, g.node_count(), eval_p, eval_method, report) + "\n";
      write_or_print(eval_out, text, out);
    } else if (*render) {
      const Graph g = load_graph(render_graph);
      const Layout x = load_any_layout(render_layout);
      detail::write_file(render_out, render_svg(g, x, style));
    } else if (*bench) {
      spec.methods.clear();
      for (const auto& m : bench_methods) spec.methods.push_back(parse_method(m));
      spec.sp_sgd = spec.word2vec.optimizer;
      spec.record_timing = !no_timing;
      spec.seed = seed;
      if (!bench_model.empty()) spec.model = load_model(bench_model);
      if (!bench_grid.empty() && spec.keep_layouts == 0) spec.keep_layouts = 1;
      const auto result = run_bench(spec);
      std::string target = bench_out;
      if (target.empty()) {
        if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) {
          fs::create_directories(dir);
          target = (fs::path(dir) / "bench.csv").string();
        }
      }
      write_or_print(target, format_bench_csv(result), out);
      if (!bench_grid.empty()) {
        RenderStyle grid_style;
        grid_style.canvas = 200;
        grid_style.margin = 12;
        grid_style.node_radius = 3;
        detail::write_file(bench_grid, render_bench_grid(result, grid_columns, grid_style));
      }
      std::size_t failed = 0;
      for (const auto& row : result.rows) failed += row.excluded;
      if (failed > 0) err << "bench: " << failed << " instance(s) excluded\n";
    } else if (*train) {
      tcfg.model.input_dim = tcfg.skipgram.dim;
      const auto result = train_model(family, tcfg, seed);
      save_model(result.model, train_out);
      if (!train_trace.empty()) detail::write_file(train_trace, format_validation_trace(result.trace));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace embedlayout
