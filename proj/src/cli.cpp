#include "geomae/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "geomae/datasets.hpp"
#include "geomae/diagnostics.hpp"
#include "geomae/errors.hpp"
#include "geomae/geometry.hpp"
#include "geomae/gradcheck.hpp"
#include "geomae/metrics.hpp"
#include "geomae/nn.hpp"
#include "geomae/pca.hpp"
#include "geomae/plotting.hpp"
#include "geomae/verify.hpp"

namespace fs = std::filesystem;

namespace geomae {

namespace {

class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Everything one invocation writes, plus what its manifest records.
class Run {
 public:
  Run(std::vector<std::string> args, std::string config_path, std::string resolved)
      : args_(std::move(args)), config_path_(std::move(config_path)), resolved_(std::move(resolved)) {}

  void write(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << bytes;
    if (!out) throw IoError("failed writing " + path.string());
    outputs_.push_back(path);
  }

  void record(const fs::path& path) { outputs_.push_back(path); }

  // One block per output file in <dir>/manifest.txt; blocks for other files
  // already present there are kept.
  void write_manifests(std::uint64_t seed) const {
    std::map<fs::path, std::vector<fs::path>> by_dir;
    for (const fs::path& p : outputs_) by_dir[p.parent_path()].push_back(p);
    for (const auto& [dir, files] : by_dir) {
      const fs::path manifest = (dir.empty() ? fs::path(".") : dir) / "manifest.txt";
      std::map<std::string, std::string> blocks = read_blocks(manifest);
      for (const fs::path& f : files) blocks[f.filename().string()] = block(seed);
      std::string text = "# geomae manifest v1\n";
      for (const auto& [name, body] : blocks) text += "\n[" + name + "]\n" + body;
      std::ofstream out(manifest, std::ios::binary);
      if (!out) throw IoError("cannot write " + manifest.string());
      out << text;
    }
  }

 private:
  std::string block(std::uint64_t seed) const {
    std::string command;
    for (std::size_t i = 0; i < args_.size(); ++i) {
      if (i > 0) command += ' ';
      command += i == 0 ? std::string("geomae") : args_[i];
    }
    std::string body = "command = " + command + "\n";
    body += "seed = " + std::to_string(seed) + "\n";
    body += "config_file = " + (config_path_.empty() ? std::string("-") : config_path_) + "\n";
    body += "config_hash = " + hex64(fnv1a64(resolved_)) + "\n";
    std::istringstream lines(resolved_);
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty()) body += "option " + line + "\n";
    }
    return body;
  }

  static std::map<std::string, std::string> read_blocks(const fs::path& manifest) {
    std::map<std::string, std::string> blocks;
    std::ifstream in(manifest);
    if (!in) return blocks;
    std::string line;
    std::string current;
    while (std::getline(in, line)) {
      if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
        current = line.substr(1, line.size() - 2);
        blocks[current];
      } else if (!current.empty() && !line.empty()) {
        blocks[current] += line + "\n";
      }
    }
    return blocks;
  }

  std::vector<std::string> args_;
  std::string config_path_;
  std::string resolved_;
  std::vector<fs::path> outputs_;
};

EmbeddingFrame load_inputs(const std::string& path, bool do_standardize, std::ostream& err) {
  EmbeddingFrame frame = load_csv(path);
  if (frame.x.cols() == 0) throw FormatError(path + ": no input columns");
  if (do_standardize) {
    std::vector<std::size_t> dropped;
    frame = standardize(frame, &dropped);
    for (std::size_t c : dropped) err << "geomae: warning: dropped constant feature column " << c << '\n';
  }
  return frame;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// ---- subcommands --------------------------------------------------------

struct GenDataOptions {
  std::string kind;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::string out;
  std::string raster;
};

void cmd_gen_data(const GenDataOptions& o, Run& run, std::ostream& out) {
  std::ostringstream csv;
  if (o.kind == "earth") {
    const LandRaster raster = o.raster.empty() ? default_land_raster() : load_land_raster(o.raster);
    const EarthSample sample = earth_generate(o.n, o.seed, raster);
    write_csv(csv, sample.frame);
    out << "generated " << sample.frame.size() << " earth points from " << sample.attempted
        << " sphere samples (acceptance " << sample.acceptance_rate() << ")\n";
  } else {
    const EmbeddingFrame frame = toy_manifold(parse_toy_kind(o.kind), o.n, o.seed);
    write_csv(csv, frame);
    out << "generated " << frame.size() << " " << o.kind << " points\n";
  }
  run.write(o.out, csv.str());
}

struct TrainOptions {
  std::string data;
  std::string model = "geometric";
  double alpha = 0.1;
  std::size_t epochs = 100;
  std::size_t batch = 125;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::uint64_t seed = 0;
  std::size_t latent = 2;
  std::size_t width = 100;
  std::size_t depth = 4;
  std::optional<double> det_floor;
  bool standardize = false;
  std::string out;
  std::string log;
  std::string embedding_out;
};

void cmd_train(const TrainOptions& o, Run& run, std::ostream& out, std::ostream& err) {
  const EmbeddingFrame frame = load_inputs(o.data, o.standardize, err);
  const Matrix& x = frame.x;
  Autoencoder model;
  TrainingLog log;
  if (o.model == "pca") {
    const PcaModel pca = pca_fit(x, o.latent);
    if (pca.spectral_gap_warning) err << "geomae: warning: principal subspace is not unique (repeated singular value)\n";
    model = pca_as_autoencoder(pca);
    const Matrix z = forward(model.encoder, x);
    const double mse = (forward(model.decoder, z) - x).squaredNorm() / static_cast<double>(x.size());
    log.epochs.push_back({0, mse, geometric_loss_value(model.decoder, z)});
  } else {
    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.learning_rate = o.lr;
    cfg.weight_decay = o.weight_decay;
    cfg.alpha = o.alpha;
    cfg.seed = o.seed;
    cfg.regularizer = parse_regularizer(o.model);
    cfg.det_floor = o.det_floor;
    model = init_autoencoder(static_cast<std::size_t>(x.cols()), o.latent, o.width, o.depth, o.seed);
    log = train(model, x, cfg);
  }

  std::vector<std::uint8_t> bytes = encode_model(model);
  run.write(o.out, std::string(bytes.begin(), bytes.end()));
  if (!o.log.empty()) run.write(o.log, log.to_csv());
  const Matrix z = forward(model.encoder, x);
  if (!o.embedding_out.empty()) {
    EmbeddingFrame emb = frame;
    emb.z = z;
    std::ostringstream csv;
    write_csv(csv, emb);
    run.write(o.embedding_out, csv.str());
  }
  const EpochRecord& last = log.epochs.back();
  out << "model " << o.model << ": final reconstruction " << format_double(last.reconstruction)
      << ", regularizer " << format_double(last.regularizer);
  if (model.latent_dim() <= 3) out << ", L_det on all data " << format_double(geometric_loss_value(model.decoder, z));
  out << '\n';
}

struct DiagnoseOptions {
  std::string model;
  std::string data;
  std::string what;
  std::string out;
  bool standardize = false;
  std::size_t steps = 0;  // 0: 20 for indicatrices, 100 for condition
  std::size_t samples = 100;
  double scale = 0.6;
};

void cmd_diagnose(const DiagnoseOptions& o, Run& run, std::ostream& out, std::ostream& err) {
  const Autoencoder model = load_model(o.model);
  EmbeddingFrame frame = load_inputs(o.data, o.standardize, err);
  if (static_cast<std::size_t>(frame.x.cols()) != model.encoder.in_dim()) {
    throw ShapeError("data has " + std::to_string(frame.x.cols()) + " features, model expects " +
                     std::to_string(model.encoder.in_dim()));
  }
  if (model.latent_dim() != 2) throw std::invalid_argument("diagnose needs a model with a 2D latent space");
  frame.z = forward(model.encoder, frame.x);
  const Matrix& z = *frame.z;
  const fs::path dir = o.out;
  PlotStyle style;

  style.title = "embedding";
  run.write(dir / "embedding.svg", scatter_svg(frame, style));

  if (o.what == "determinant") {
    const HeatmapValues heat = det_heatmap(model.decoder, z);
    std::ostringstream csv;
    write_heatmap_csv(csv, z, heat);
    run.write(dir / "determinant.csv", csv.str());
    style.title = heat.mean_fallback ? "log det g - mean" : "log det g / mean - 1";
    run.write(dir / "determinant.svg", heatmap_svg(frame, heat, style));
    const auto invalid = std::count(heat.valid.begin(), heat.valid.end(), false);
    out << "determinant heatmap: " << z.rows() << " points, clip [" << heat.lo << ", " << heat.hi << "]";
    if (invalid > 0) out << ", " << invalid << " non-positive determinants";
    out << '\n';
  } else if (o.what == "indicatrices") {
    const LatentGrid grid = latent_grid(z, o.steps == 0 ? 20 : o.steps);
    auto inds = scale_indicatrices(indicatrices_at(model.decoder, grid.points, o.samples), o.scale, grid.spacing);
    std::ostringstream txt;
    write_indicatrices(txt, inds);
    run.write(dir / "indicatrices.txt", txt.str());
    style.title = "indicatrices";
    run.write(dir / "indicatrices.svg", indicatrix_svg(frame, inds, style));
    out << "indicatrices: " << inds.size() << " grid points\n";
  } else if (o.what == "condition") {
    const LatentGrid grid = latent_grid(z, o.steps == 0 ? 100 : o.steps);
    Matrix pts(static_cast<Eigen::Index>(grid.points.size()), 2);
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
      pts(static_cast<Eigen::Index>(i), 0) = grid.points[i].x;
      pts(static_cast<Eigen::Index>(i), 1) = grid.points[i].y;
    }
    const auto metrics = metrics_at(model.decoder, pts);
    std::string csv = "x,y,condition\n";
    HeatmapValues heat;
    std::vector<double> finite;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      double kappa = std::numeric_limits<double>::infinity();
      try {
        kappa = condition_number(metrics[i]);
      } catch (const NumericError&) {
      }
      csv += format_double(grid.points[i].x) + "," + format_double(grid.points[i].y) + "," + format_double(kappa) + "\n";
      const double lk = std::log10(kappa);
      heat.raw.push_back(std::isfinite(lk) ? lk : std::nan(""));
      heat.valid.push_back(std::isfinite(lk));
      if (std::isfinite(kappa)) {
        finite.push_back(lk);
        sum += kappa;
        sum_sq += kappa * kappa;
      }
    }
    run.write(dir / "condition.csv", csv);
    std::sort(finite.begin(), finite.end());
    heat.lo = 0.0;
    heat.hi = finite.empty() ? 0.0 : quantile_sorted(finite, 0.95);
    for (double v : heat.raw) heat.values.push_back(std::isnan(v) ? v : std::min(v, heat.hi));
    EmbeddingFrame grid_frame;
    grid_frame.x = pts;
    grid_frame.z = pts;
    grid_frame.labels.assign(grid.points.size(), 0);
    style.title = "log10 condition number";
    run.write(dir / "condition.svg", heatmap_svg(grid_frame, heat, style));
    const double n = static_cast<double>(finite.size());
    const double mean = n > 0 ? sum / n : std::nan("");
    const double sd = n > 0 ? std::sqrt(std::max(sum_sq / n - mean * mean, 0.0)) : std::nan("");
    std::ostringstream summary;
    summary.precision(6);
    summary << "points " << metrics.size() << "\nfinite " << finite.size() << "\nmean " << mean << "\nstd " << sd << '\n';
    run.write(dir / "condition_summary.txt", summary.str());
    out << "condition number: mean " << mean << " +- " << sd << " over " << finite.size() << " grid points\n";
  } else {
    throw std::invalid_argument("unknown diagnostic '" + o.what + "'");
  }
}

struct EvaluateOptions {
  std::string data;
  std::vector<std::string> embeddings;
  double subsample = 0.1;
  std::uint64_t seed = 0;
  std::string out;
  bool standardize = false;
  std::size_t k_min = 10;
  std::size_t k_max = 200;
  std::size_t k_step = 10;
};

void cmd_evaluate(const EvaluateOptions& o, Run& run, std::ostream& out, std::ostream& err) {
  const EmbeddingFrame data = load_inputs(o.data, o.standardize, err);
  EvalOptions eval;
  eval.subsample = o.subsample;
  eval.seed = o.seed;
  eval.ks.clear();
  if (o.k_step == 0 || o.k_min == 0 || o.k_min > o.k_max) throw std::invalid_argument("bad k range");
  for (std::size_t k = o.k_min; k <= o.k_max; k += o.k_step) eval.ks.push_back(k);

  std::vector<MetricsReport> reports;
  for (const std::string& path : o.embeddings) {
    const EmbeddingFrame emb = load_csv(path);
    const Matrix z = emb.z ? *emb.z : emb.x;
    if (z.rows() != data.x.rows()) {
      throw ShapeError(path + " has " + std::to_string(z.rows()) + " rows, data has " + std::to_string(data.x.rows()));
    }
    reports.push_back(evaluate_embedding(data.x, z, fs::path(path).stem().string(), eval));
  }
  run.write(o.out, reports_to_csv(reports));
  fs::path table = o.out;
  table.replace_extension(".txt");
  const std::string text = reports_to_table(reports);
  run.write(table, text);
  out << text;
}

struct RankOptions {
  std::string scores;
  std::string out;
};

void cmd_rank(const RankOptions& o, Run& run, std::ostream& out) {
  std::istringstream in(read_text(o.scores));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(o.scores + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(trim(cell));
  }
  if (header.size() < 3 || header[0] != "dataset" || header[1] != "model") {
    throw FormatError(o.scores + ": header must start with dataset,model");
  }
  const std::vector<std::string> metric_names(header.begin() + 2, header.end());
  std::vector<Direction> dirs;
  for (const std::string& m : metric_names) {
    const bool higher = m == "kNN" || m == "Trust" || m == "Spear";
    dirs.push_back(higher ? Direction::higher_is_better : Direction::lower_is_better);
  }
  struct Row {
    std::string dataset, model;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != header.size()) {
      throw FormatError(o.scores + " line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " cells");
    }
    Row r{cells[0], cells[1], {}};
    for (std::size_t c = 2; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        r.values.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
      } catch (const std::exception&) {
        throw FormatError(o.scores + " line " + std::to_string(lineno) + ": not a number: '" + cells[c] + "'");
      }
    }
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    rows.push_back(std::move(r));
  }
  ScoreTable table(datasets, models, metric_names, dirs);
  for (const Row& r : rows) {
    const auto d = static_cast<std::size_t>(std::find(datasets.begin(), datasets.end(), r.dataset) - datasets.begin());
    const auto m = static_cast<std::size_t>(std::find(models.begin(), models.end(), r.model) - models.begin());
    for (std::size_t k = 0; k < r.values.size(); ++k) table.set(d, m, k, r.values[k]);
  }
  const RankReport report = aggregate_ranks(table);
  run.write(o.out, report.to_csv());
  out << report.to_table();
}

void finish_suite(const SuiteReport& report, const std::string& out_path, Run& run, std::ostream& out) {
  const std::string text = report.to_text();
  out << text;
  if (!out_path.empty()) run.write(out_path, text);
  if (!report.passed()) {
    const auto failed = std::count_if(report.checks.begin(), report.checks.end(), [](const CheckResult& c) { return !c.passed; });
    throw CheckFailed(std::to_string(failed) + " of " + std::to_string(report.checks.size()) + " " + report.suite +
                      " checks failed");
  }
}

std::string one_line(std::string msg) {
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return msg;
}

int fail(std::ostream& err, const std::string& kind, const std::string& msg, int code) {
  err << "geomae: error[" << kind << "]: " << one_line(msg) << '\n';
  return code;
}

}  // namespace

std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& config_text) {
  std::vector<std::string> extra;
  std::istringstream in(config_text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) extra.push_back(flag + "=" + value);
  }
  // Inserted right after the subcommand name.
  std::vector<std::string> merged(args.begin(), args.begin() + std::min<std::ptrdiff_t>(2, static_cast<std::ptrdiff_t>(args.size())));
  merged.insert(merged.end(), extra.begin(), extra.end());
  if (args.size() > 2) merged.insert(merged.end(), args.begin() + 2, args.end());
  return merged;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  // Pull out --config before CLI11 sees the command line.
  std::vector<std::string> args;
  std::string config_path;
  for (std::size_t i = 0; i < raw_args.size(); ++i) {
    const std::string& a = raw_args[i];
    if (a == "--config") {
      if (i + 1 >= raw_args.size()) return fail(err, "usage", "--config requires a file", kExitUsage);
      config_path = raw_args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      args.push_back(a);
    }
  }

  CLI::App app{"geomae: geometric autoencoder toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a dataset as CSV");
  gen_cmd->add_option("--kind", gen.kind, "earth, swiss_roll, hemisphere or two_moons_3d")->required();
  gen_cmd->add_option("--n", gen.n, "Number of points");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out)->required();
  gen_cmd->add_option("--raster", gen.raster, "Land raster (earth only); defaults to the shipped one");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train an autoencoder (or fit PCA)");
  train_cmd->add_option("--data", tr.data)->required();
  train_cmd->add_option("--model", tr.model)->check(CLI::IsMember({"vanilla", "geometric", "lee", "pca"}));
  train_cmd->add_option("--alpha", tr.alpha, "Regularizer weight");
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--batch", tr.batch);
  train_cmd->add_option("--lr", tr.lr);
  train_cmd->add_option("--weight-decay", tr.weight_decay);
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--latent", tr.latent);
  train_cmd->add_option("--width", tr.width);
  train_cmd->add_option("--depth", tr.depth, "Hidden layers per network");
  train_cmd->add_option("--det-floor", tr.det_floor, "Clamp determinants instead of failing");
  train_cmd->add_flag("--standardize", tr.standardize, "Standardize features first");
  train_cmd->add_option("--out", tr.out)->required();
  train_cmd->add_option("--log", tr.log);
  train_cmd->add_option("--embedding-out", tr.embedding_out, "Write inputs with latents as CSV");

  DiagnoseOptions dg;
  auto* diag_cmd = app.add_subcommand("diagnose", "Indicatrices, determinant heatmap or condition numbers");
  diag_cmd->add_option("--model", dg.model)->required();
  diag_cmd->add_option("--data", dg.data)->required();
  diag_cmd->add_option("--what", dg.what)->required()->check(CLI::IsMember({"indicatrices", "determinant", "condition"}));
  diag_cmd->add_option("--out", dg.out, "Output directory")->required();
  diag_cmd->add_flag("--standardize", dg.standardize);
  diag_cmd->add_option("--steps", dg.steps, "Grid steps per axis (0 = default)");
  diag_cmd->add_option("--samples", dg.samples, "Directions per indicatrix");
  diag_cmd->add_option("--scale", dg.scale, "Median indicatrix diameter in grid spacings");

  EvaluateOptions ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Embedding quality metrics");
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--embedding", ev.embeddings, "Embedding CSV (z columns, or x columns if none)")->required();
  eval_cmd->add_option("--subsample", ev.subsample);
  eval_cmd->add_option("--seed", ev.seed);
  eval_cmd->add_option("--out", ev.out)->required();
  eval_cmd->add_flag("--standardize", ev.standardize);
  eval_cmd->add_option("--k-min", ev.k_min);
  eval_cmd->add_option("--k-max", ev.k_max);
  eval_cmd->add_option("--k-step", ev.k_step);

  RankOptions rk;
  auto* rank_cmd = app.add_subcommand("rank", "Aggregate ranks from a dataset,model,metric... table");
  rank_cmd->add_option("--scores", rk.scores)->required();
  rank_cmd->add_option("--out", rk.out)->required();

  std::uint64_t gc_seed = 0;
  std::string gc_out;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gc_cmd->add_option("--seed", gc_seed);
  gc_cmd->add_option("--out", gc_out);

  std::string suite;
  std::uint64_t vf_seed = 0;
  std::string vf_out;
  auto* vf_cmd = app.add_subcommand("verify", "Property suites");
  vf_cmd->add_option("--suite", suite)->required()->check(CLI::IsMember({"invariance", "pca", "metrics"}));
  vf_cmd->add_option("--seed", vf_seed);
  vf_cmd->add_option("--out", vf_out);

  try {
    if (!config_path.empty()) args = merge_config(args, read_text(config_path));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return fail(err, "usage", e.what(), kExitUsage);
  } catch (const IoError& e) {
    return fail(err, "io", e.what(), kExitInput);
  } catch (const FormatError& e) {
    return fail(err, "format", e.what(), kExitInput);
  }

  CLI::App* sub = app.get_subcommands().front();
  Run run(raw_args, config_path, sub->config_to_str(true, false));
  try {
    std::uint64_t seed = 0;
    if (sub == gen_cmd) {
      cmd_gen_data(gen, run, out);
      seed = gen.seed;
    } else if (sub == train_cmd) {
      cmd_train(tr, run, out, err);
      seed = tr.seed;
    } else if (sub == diag_cmd) {
      cmd_diagnose(dg, run, out, err);
    } else if (sub == eval_cmd) {
      cmd_evaluate(ev, run, out, err);
      seed = ev.seed;
    } else if (sub == rank_cmd) {
      cmd_rank(rk, run, out);
    } else if (sub == gc_cmd) {
      seed = gc_seed;
      finish_suite(run_gradcheck(gc_seed), gc_out, run, out);
    } else if (sub == vf_cmd) {
      seed = vf_seed;
      finish_suite(run_suite(suite, vf_seed), vf_out, run, out);
    }
    run.write_manifests(seed);
  } catch (const CheckFailed& e) {
    return fail(err, "check", e.what(), kExitCheckFailed);
  } catch (const IoError& e) {
    return fail(err, "io", e.what(), kExitInput);
  } catch (const FormatError& e) {
    return fail(err, "format", e.what(), kExitInput);
  } catch (const ShapeError& e) {
    return fail(err, "shape", e.what(), kExitInput);
  } catch (const TrainingError& e) {
    return fail(err, "training", e.what(), kExitNumeric);
  } catch (const NumericError& e) {
    return fail(err, "numeric", e.what(), kExitNumeric);
  } catch (const std::invalid_argument& e) {
    return fail(err, "invalid-argument", e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return fail(err, "internal", e.what(), kExitInternal);
  }
  return kExitOk;
}

}  // namespace geomae
