#include "cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fragkit/dataset.hpp"
#include "fragkit/error.hpp"
#include "fragkit/feature_config.hpp"
#include "fragkit/fragstore.hpp"
#include "fragkit/learn/machine.hpp"
#include "fragkit/plot.hpp"
#include "fragkit/select.hpp"

namespace fragkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- helpers

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

SplitSpec make_split(const std::vector<double>& range, const std::vector<double>& percents) {
  if (range.size() != 2) throw parameter_error("--split/--range takes two fractions, e.g. 0,1");
  if (percents.size() != 2) throw parameter_error("--percents takes two values summing to 100, e.g. 80,20");
  SplitSpec s{range[0], range[1], percents[0], percents[1]};
  s.validate();
  return s;
}

void print_matrix(std::ostream& out, const learn::ConfusionMatrix& cm, const Eigen::MatrixXd& m, int precision) {
  std::size_t width = 8;
  for (const auto& n : cm.true_names) width = std::max(width, n.size() + 1);
  for (const auto& n : cm.predicted_names) width = std::max(width, n.size() + 1);
  out << std::setw(static_cast<int>(width)) << "true\\pred";
  for (const auto& n : cm.predicted_names) out << std::setw(static_cast<int>(width)) << n;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << std::setw(static_cast<int>(width)) << cm.true_names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << std::setw(static_cast<int>(width)) << std::fixed << std::setprecision(precision) << m(r, c);
    }
    out << '\n';
  }
  out << std::defaultfloat << std::setprecision(6);
}

void print_evaluation(std::ostream& out, const std::string& title, const learn::Evaluation& e) {
  out << title << ": accuracy " << std::fixed << std::setprecision(2) << 100.0 * e.accuracy << "% over " << e.samples
      << " samples\n"
      << std::defaultfloat;
  out << "confusion (weighted counts):\n";
  print_matrix(out, e.confusion, e.confusion.counts, 2);
  out << "confusion (row percent):\n";
  print_matrix(out, e.confusion, learn::row_percent(e.confusion.counts), 1);
}

std::vector<FragmentArchive> load_archives(const std::vector<std::string>& paths) {
  std::vector<FragmentArchive> archives;
  for (const auto& p : paths) archives.push_back(read_archive(p));
  return archives;
}

std::string file_kind(const fs::path& path) {
  const auto bytes = read_file(path);
  const std::string head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 32)));
  if (head.rfind("FRAG", 0) == 0) return "archive";
  if (head.rfind(kDatasetMagic, 0) == 0) return "dataset";
  if (head.rfind(learn::kModelMagic, 0) == 0) return "model";
  if (head.rfind(learn::kResultsMagic, 0) == 0) return "results";
  throw format_error("unrecognized artifact (no fragkit header): " + path.string());
}

bool stdin_is_terminal() { return ::isatty(STDIN_FILENO) != 0; }

// Model flags shared by train and crossval; only flags given on the command
// line reach the parameter object, so defaults live in the library.
struct ModelFlags {
  std::string kind = "tree";
  std::optional<double> min_leaf;
  std::optional<std::size_t> trees;
  std::optional<std::size_t> features_per_split;
  bool no_bootstrap = false;
  std::optional<std::string> kernel;
  std::optional<double> box;
  std::optional<double> scale;
  std::optional<int> order;
  std::optional<std::size_t> features_per_learner;
  std::optional<std::size_t> learners;
  std::optional<std::size_t> k;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> max_epochs;
  std::vector<std::string> extra;  // key=value, value parsed as JSON when possible

  void attach(CLI::App* app) {
    app->add_option("--model", kind, "tree|forest|svm|knn|nb|lda|nn")->required();
    app->add_option("--min-leaf", min_leaf, "tree/forest: minimum leaf size as a fraction of the training set");
    app->add_option("--trees", trees, "forest: number of trees");
    app->add_option("--features-per-split", features_per_split, "forest: features tried per split (0 = ceil(sqrt F))");
    app->add_flag("--no-bootstrap", no_bootstrap, "forest: grow every tree on the full training set");
    app->add_option("--kernel", kernel, "svm: rbf|linear|polynomial");
    app->add_option("--box", box, "svm: box constraint");
    app->add_option("--scale", scale, "svm: kernel scale c");
    app->add_option("--order", order, "svm: polynomial order q (1..7)");
    app->add_option("--features-per-learner", features_per_learner, "knn: random features per learner (0 = all)");
    app->add_option("--learners", learners, "knn: number of learners");
    app->add_option("--neighbors", k, "knn: neighbors per vote");
    app->add_option("--hidden", hidden, "nn: hidden layer dimension");
    app->add_option("--max-epochs", max_epochs, "nn: epoch limit");
    app->add_option("--param", extra, "extra model parameter key=value");
  }

  json params() const {
    json p = json::object();
    if (min_leaf) p["min_leaf_fraction"] = *min_leaf;
    if (trees) p["n_trees"] = *trees;
    if (features_per_split) p["features_per_split"] = *features_per_split;
    if (no_bootstrap) p["bootstrap"] = false;
    if (kernel) p["kernel"] = *kernel;
    if (box) p["box"] = *box;
    if (scale) p["scale"] = *scale;
    if (order) p["order"] = *order;
    if (features_per_learner) p["features_per_learner"] = *features_per_learner;
    if (learners) p["learners"] = *learners;
    if (this->k) p["k"] = *this->k;
    if (hidden) p["hidden"] = *hidden;
    if (max_epochs) p["max_epochs"] = *max_epochs;
    for (const auto& kv : extra) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw parameter_error("--param expects key=value, got '" + kv + "'");
      const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
      try {
        p[key] = json::parse(value);
      } catch (const json::exception&) {
        p[key] = value;
      }
    }
    return p;
  }
};

// ---------------------------------------------------------------- commands

class Commands {
 public:
  Commands(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  void fragment(const std::string& corpus, const std::string& out_dir, const ExtractionParams& params) {
    const auto scan = scan_corpus(corpus, out_dir, params);
    fs::create_directories(out_dir);
    for (const auto& w : scan.warnings) err_ << "warning: " << w << '\n';
    for (const auto& a : scan.archives) {
      const auto path = fs::path(out_dir) / (identifier_safe(a.class_name) + ".frag");
      write_archive(a, path);
      std::size_t files = 0;
      for (std::size_t i = 0; i < a.records.size(); ++i) files += i == 0 || a.records[i].file_id != a.records[i - 1].file_id;
      out_ << a.class_name << ": " << a.records.size() << " fragments from " << files << " files -> " << path.string()
           << '\n';
    }
  }

  void import_raw(const std::string& raw, std::size_t size, const std::string& name, const std::string& out) {
    const auto data = read_file(raw);
    const auto archive = import_raw_concatenation(data, size, name);
    write_archive(archive, out);
    out_ << name << ": " << archive.records.size() << " fragments -> " << out << '\n';
  }

  void extract(const std::optional<std::string>& config_path, const std::optional<std::string>& preset,
               const std::optional<std::string>& machine_path, const std::vector<std::string>& archive_paths,
               const std::string& out) {
    const auto archives = load_archives(archive_paths);
    Dataset ds;
    const int sources = config_path.has_value() + preset.has_value() + machine_path.has_value();
    if (sources != 1) throw parameter_error("give exactly one of --config, --preset or --machine");
    if (machine_path) {
      ds = learn::dataset_for_machine(archives, learn::read_machine(*machine_path));
    } else {
      FeatureConfig config;
      if (preset) {
        if (*preset != "text") throw parameter_error("unknown preset '" + *preset + "' (valid: text)");
        config = text_fragment_config();
      } else {
        const auto bytes = read_file(*config_path);
        json j;
        try {
          j = json::parse(bytes.begin(), bytes.end());
        } catch (const json::exception& e) {
          throw format_error("feature configuration " + *config_path + " is not valid JSON: " + e.what());
        }
        config = FeatureConfig::from_json(j, archives);
      }
      ds = build_dataset(archives, config);
    }
    write_dataset(ds, out);
    out_ << "dataset: " << ds.size() << " samples, " << ds.features() << " features, " << ds.classes()
         << " classes -> " << out << '\n';
  }

  void show(const std::string& path) {
    const auto kind = file_kind(path);
    out_ << "file: " << path << "\nkind: " << kind << '\n';
    if (kind == "archive") {
      const auto a = read_archive(path);
      std::size_t files = 0, lo = SIZE_MAX, hi = 0;
      for (std::size_t i = 0; i < a.records.size(); ++i) {
        files += i == 0 || a.records[i].file_id != a.records[i - 1].file_id;
        lo = std::min(lo, a.records[i].bytes.size());
        hi = std::max(hi, a.records[i].bytes.size());
      }
      out_ << "format version: " << a.format_version << "\nclass: " << a.class_name
           << "\nfragments: " << a.records.size() << "\nfiles: " << files << '\n';
      if (!a.records.empty()) out_ << "fragment bytes: " << lo << ".." << hi << '\n';
    } else if (kind == "dataset") {
      const auto ds = read_dataset(path);
      const auto counts = ds.class_counts();
      out_ << "samples (S): " << ds.size() << "\nfeatures (F): " << ds.features()
           << "\ndescriptors: " << ds.descriptors.size() << "\nclasses (C): " << ds.classes() << '\n';
      for (std::size_t c = 0; c < ds.classes(); ++c) out_ << "  " << ds.class_names[c] << ": " << counts[c] << '\n';
      out_ << "file groups: " << file_groups(ds.file_ids).size() << '\n';
      out_ << "feature categories:";
      for (const auto& s : ds.feature_config.specs()) out_ << ' ' << to_string(s.kind);
      if (ds.feature_config.empty()) out_ << " (column subset, no extraction recipe)";
      out_ << "\nfirst descriptors:";
      for (std::size_t j = 0; j < std::min<std::size_t>(ds.features(), 8); ++j) out_ << ' ' << ds.descriptors[j];
      out_ << (ds.features() > 8 ? " ...\n" : "\n");
    } else if (kind == "model") {
      const auto m = learn::read_machine(path);
      out_ << "machine: " << learn::to_string(m.kind) << "\nparameters: " << m.params.dump()
           << "\nscaling: " << to_string(m.scaling.method) << "\nfeatures: " << m.descriptors.size()
           << "\nclasses:";
      for (const auto& c : m.class_names) out_ << ' ' << c;
      out_ << "\nfeature recipe: " << (m.feature_config.empty() ? "none" : "stored") << '\n';
    } else {
      out_ << learn::read_results(path).dump(2) << '\n';
    }
  }

  void permute(const std::string& in, std::uint64_t seed, const std::string& out) {
    const auto ds = permute_dataset(read_dataset(in), seed);
    write_dataset(ds, out);
    out_ << "permuted " << file_groups(ds.file_ids).size() << " file groups -> " << out << '\n';
  }

  void expand(const std::string& a, const std::string& b, const std::string& out) {
    const auto ds = expand_dataset(read_dataset(a), read_dataset(b));
    write_dataset(ds, out);
    out_ << "expanded to " << ds.features() << " features -> " << out << '\n';
  }

  void merge(const std::string& in, const std::vector<std::string>& specs, const std::string& out) {
    const auto ds = read_dataset(in);
    std::vector<std::vector<std::uint32_t>> groups;
    std::vector<std::string> names;
    for (const auto& s : specs) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw parameter_error("--group expects NEW=OLD1,OLD2, got '" + s + "'");
      names.push_back(s.substr(0, eq));
      const auto members = split_list(s.substr(eq + 1));
      groups.push_back(class_indices(ds, members));
    }
    const auto merged = merge_labels(ds, groups, names);
    write_dataset(merged, out);
    out_ << "classes: " << ds.classes() << " -> " << merged.classes() << " -> " << out << '\n';
  }

  void subset(const std::string& in, const std::string& classes, const std::string& features,
              const std::optional<std::string>& features_file, const std::string& out) {
    const auto ds = read_dataset(in);
    std::vector<std::uint32_t> keep_c;
    if (classes.empty()) {
      for (std::uint32_t c = 0; c < ds.classes(); ++c) keep_c.push_back(c);
    } else {
      keep_c = class_indices(ds, split_list(classes));
    }
    std::vector<std::string> names = split_list(features);
    if (features_file) {
      const auto bytes = read_file(*features_file);
      const auto more = split_list(std::string(bytes.begin(), bytes.end()), '\n');
      names.insert(names.end(), more.begin(), more.end());
    }
    std::vector<std::size_t> keep_f;
    if (names.empty()) {
      for (std::size_t j = 0; j < ds.features(); ++j) keep_f.push_back(j);
    } else {
      keep_f = feature_indices(ds, names);
    }
    const auto sub = sub_dataset(ds, keep_c, keep_f);
    write_dataset(sub, out);
    out_ << "subset: " << sub.size() << " samples, " << sub.features() << " features, " << sub.classes()
         << " classes -> " << out << '\n';
  }

  void train(const ModelFlags& flags, const std::string& dataset, const SplitSpec& split, const std::string& weighting,
             const std::string& scaling, std::uint64_t seed, const std::string& out,
             const std::optional<std::string>& results) {
    const auto ds = read_dataset(dataset);
    learn::TrainOptions o;
    o.kind = learn::parse_machine_kind(flags.kind);
    o.params = flags.params();
    o.split = split;
    o.weighting = parse_weighting(weighting);
    o.scaling = parse_scaling(scaling);
    o.seed = seed;
    const auto report = learn::train_machine(ds, o);
    learn::write_machine(report.machine, out);

    out_ << "machine: " << flags.kind << "\nparameters: " << report.machine.params.dump() << "\nweighting: " << weighting
         << "\nscaling: " << scaling << "\nseed: " << seed << "\ntraining samples: " << report.train_samples
         << "\nvalidation samples: " << report.validation_samples << '\n';
    print_evaluation(out_, "training", report.train);
    if (report.validation) print_evaluation(out_, "validation", *report.validation);
    out_ << "model -> " << out << '\n';
    if (results) {
      json r{{"command", "train"},
             {"machine", flags.kind},
             {"parameters", report.machine.params},
             {"weighting", weighting},
             {"scaling", scaling},
             {"seed", seed},
             {"split", {split.start, split.end}},
             {"percents", {split.train_percent, split.validation_percent}},
             {"train", learn::to_json(report.train)}};
      if (report.validation) r["validation"] = learn::to_json(*report.validation);
      learn::write_results(r, *results);
    }
  }

  void test(const std::string& model, const std::string& dataset, const std::vector<double>& range,
            const std::string& weighting, const std::optional<std::string>& results) {
    const auto m = learn::read_machine(model);
    const auto ds = read_dataset(dataset);
    if (range.size() != 2) throw parameter_error("--range takes two fractions, e.g. 0,1");
    const auto rows = split_dataset(ds, SplitSpec{range[0], range[1], 100.0, 0.0}).train;
    const auto e = learn::evaluate(m, ds, rows, parse_weighting(weighting));
    print_evaluation(out_, "test", e);
    if (results) {
      learn::write_results({{"command", "test"},
                            {"machine", learn::to_string(m.kind)},
                            {"range", range},
                            {"weighting", weighting},
                            {"test", learn::to_json(e)}},
                           *results);
    }
  }

  void crossval(const ModelFlags& flags, const std::string& dataset, std::size_t k, const std::string& weighting,
                const std::string& scaling, const std::vector<double>& percents, std::uint64_t seed,
                const std::optional<std::string>& results) {
    const auto ds = read_dataset(dataset);
    if (percents.size() != 2) throw parameter_error("--percents takes two values summing to 100");
    learn::CvOptions o;
    o.kind = learn::parse_machine_kind(flags.kind);
    o.params = flags.params();
    o.folds = k;
    o.weighting = parse_weighting(weighting);
    o.scaling = parse_scaling(scaling);
    o.train_percent = percents[0];
    o.seed = seed;
    const auto report = learn::cross_validate(ds, o);
    out_ << "machine: " << flags.kind << "\nK: " << k << '\n';
    json folds = json::array();
    for (std::size_t f = 0; f < report.fold_results.size(); ++f) {
      const auto& r = report.fold_results[f];
      out_ << "fold " << f + 1 << " [" << report.fold_ranges[f].first << ", " << report.fold_ranges[f].second
           << "): accuracy " << std::fixed << std::setprecision(2) << 100.0 * r.accuracy << "%\n"
           << std::defaultfloat;
      folds.push_back(learn::to_json(r));
    }
    learn::Evaluation pooled{report.pooled, report.accuracy, ds.size()};
    print_evaluation(out_, "cross-validation (pooled)", pooled);
    if (results) {
      learn::write_results({{"command", "crossval"},
                            {"machine", flags.kind},
                            {"K", k},
                            {"weighting", weighting},
                            {"scaling", scaling},
                            {"seed", seed},
                            {"folds", folds},
                            {"pooled", learn::to_json(pooled)}},
                           *results);
    }
  }

  void select(const std::string& method, const std::string& dataset, std::optional<double> threshold, std::size_t k,
              std::optional<std::size_t> max_features, double min_leaf, const SplitSpec& split,
              const std::string& weighting, std::uint64_t seed, const std::string& out) {
    const auto ds = read_dataset(dataset);
    select::SelectionReport report;
    if (method == "embedded") {
      learn::TrainOptions o;
      o.kind = learn::MachineKind::Tree;
      o.params = {{"min_leaf_fraction", min_leaf}};
      o.split = split;
      o.weighting = parse_weighting(weighting);
      o.scaling = ScalingMethod::None;
      o.seed = seed;
      if (!threshold && stdin_is_terminal()) {
        report = select::embedded_tree_selection(ds, o, std::nullopt);
        print_ranking(ds, report, "relative node size");
        out_ << "score threshold (features scoring above it are kept): " << std::flush;
        double t = 0.0;
        if (std::cin >> t) threshold = t;
      }
      report = select::embedded_tree_selection(ds, o, threshold);
    } else if (method == "wrapper") {
      report = select::wrapper_sfs_lda(ds, k, max_features);
    } else {
      throw parameter_error("--method must be embedded or wrapper, got '" + method + "'");
    }
    for (const auto& w : report.warnings) err_ << "warning: " << w << '\n';
    print_ranking(ds, report, method == "embedded" ? "relative node size" : "CV balanced accuracy");
    if (report.chosen.empty()) throw input_error("no feature selected; nothing written");
    std::vector<std::uint32_t> all_classes;
    for (std::uint32_t c = 0; c < ds.classes(); ++c) all_classes.push_back(c);
    const auto sub = sub_dataset(ds, all_classes, report.chosen);
    write_dataset(sub, out);
    out_ << "selected " << report.chosen.size() << " features -> " << out << '\n';
  }

  void histogram(const std::string& dataset, const std::string& features, const std::string& classes,
                 std::size_t bins, const std::string& prefix) {
    const auto ds = read_dataset(dataset);
    const auto f_idx = feature_indices(ds, split_list(features));
    if (f_idx.empty()) throw parameter_error("--features names at least one feature");
    std::vector<std::uint32_t> c_idx;
    if (classes.empty()) {
      for (std::uint32_t c = 0; c < ds.classes(); ++c) c_idx.push_back(c);
    } else {
      c_idx = class_indices(ds, split_list(classes));
    }
    for (auto f : f_idx) {
      const auto h = plot::make_histogram(ds, f, c_idx, bins);
      const auto base = prefix + "_" + ds.descriptors[f];
      write_file_atomic(base + ".tsv", plot::histogram_tsv(h));
      write_file_atomic(base + ".svg", plot::histogram_svg(h));
      out_ << "histogram " << ds.descriptors[f] << " -> " << base << ".tsv, " << base << ".svg\n";
    }
  }

  void scatter(const std::string& dataset, const std::string& features, const std::vector<std::string>& group_specs,
               const std::string& prefix) {
    const auto ds = read_dataset(dataset);
    const auto f_idx = feature_indices(ds, split_list(features));
    std::vector<plot::ScatterGroup> groups;
    if (group_specs.empty()) {
      for (std::uint32_t c = 0; c < ds.classes(); ++c) groups.push_back({ds.class_names[c], {c}});
    }
    for (const auto& g : group_specs) {
      const auto eq = g.find('=');
      const auto name = eq == std::string::npos ? g : g.substr(0, eq);
      const auto members = split_list(eq == std::string::npos ? g : g.substr(eq + 1));
      groups.push_back({name, class_indices(ds, members)});
    }
    const auto s = plot::make_scatter(ds, f_idx, groups);
    write_file_atomic(prefix + ".tsv", plot::scatter_tsv(s));
    write_file_atomic(prefix + ".svg", plot::scatter_svg(s));
    for (std::size_t g = 0; g < s.group_names.size(); ++g) {
      out_ << s.group_names[g] << ": " << s.points[g].size() << " points\n";
    }
    out_ << "scatter -> " << prefix << ".tsv, " << prefix << ".svg\n";
  }

 private:
  void print_ranking(const Dataset& ds, const select::SelectionReport& r, const std::string& score_name) {
    out_ << "rank  feature  " << score_name << '\n';
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      const bool kept = std::find(r.chosen.begin(), r.chosen.end(), r.ranked[i]) != r.chosen.end();
      out_ << std::setw(4) << i + 1 << "  " << ds.descriptors[r.ranked[i]] << "  " << std::setprecision(6)
           << r.scores[i] << (kept ? "  *" : "") << '\n';
    }
  }

  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fragkit: file-fragment feature extraction and classification"};
  app.name("fragkit");
  app.require_subcommand(1);
  Commands cmd(out, err);

  // fragment
  std::string corpus, out_dir;
  ExtractionParams ex;
  auto* fragment = app.add_subcommand("fragment", "cut a corpus (one subfolder per class) into fragment archives");
  fragment->add_option("--in,--corpus", corpus, "corpus root (one subfolder per class)")->required();
  fragment->add_option("--out", out_dir, "output directory (outside the corpus)")->required();
  fragment->add_option("--sizes", ex.sizes, "fragment sizes in bytes, drawn uniformly per fragment")->delimiter(',');
  fragment->add_option("--head-discard", ex.head_discard, "fraction of leading fragments discarded per file");
  fragment->add_option("--tail-discard", ex.tail_discard, "fraction of trailing fragments discarded per file");
  fragment->add_option("--max-per-file", ex.max_fragments, "maximum fragments kept per file");
  fragment->add_option("--seed", ex.rng_seed, "random seed");

  // import
  std::string raw, import_class, import_out;
  std::size_t import_size = 0;
  auto* import = app.add_subcommand("import", "convert a raw concatenation of equal-size fragments to an archive");
  import->add_option("--raw", raw, "raw fragment file")->required();
  import->add_option("--size", import_size, "fragment size in bytes")->required();
  import->add_option("--class", import_class, "class name")->required();
  import->add_option("--out", import_out, "archive path")->required();

  // extract
  std::optional<std::string> config_path, preset, machine_path;
  std::vector<std::string> archive_paths;
  std::string extract_out;
  auto* extract = app.add_subcommand("extract", "build a feature dataset from archives");
  extract->add_option("--config", config_path, "feature configuration JSON");
  extract->add_option("--preset", preset, "built-in configuration: text");
  extract->add_option("--machine", machine_path, "reuse the feature recipe of a trained model");
  extract->add_option("--archives", archive_paths, "one archive per class")->required();
  extract->add_option("--out", extract_out, "dataset path")->required();

  // dataset operations
  auto* dataset = app.add_subcommand("dataset", "dataset operations");
  dataset->require_subcommand(1);
  std::string d_in, d_out, d_a, d_b, d_classes, d_features;
  std::optional<std::string> d_features_file;
  std::uint64_t d_seed = 0;
  std::vector<std::string> d_groups;
  auto* permute = dataset->add_subcommand("permute", "shuffle file groups as blocks");
  permute->add_option("--in", d_in)->required();
  permute->add_option("--seed", d_seed);
  permute->add_option("--out", d_out)->required();
  auto* expand = dataset->add_subcommand("expand", "append the feature columns of a second dataset");
  expand->add_option("--a", d_a)->required();
  expand->add_option("--b", d_b)->required();
  expand->add_option("--out", d_out)->required();
  auto* merge = dataset->add_subcommand("merge-labels", "merge classes into new labels");
  merge->add_option("--in", d_in)->required();
  merge->add_option("--group", d_groups, "NEW=OLD1,OLD2 (repeatable)")->required();
  merge->add_option("--out", d_out)->required();
  auto* subset = dataset->add_subcommand("subset", "keep some classes and/or features");
  subset->add_option("--in", d_in)->required();
  subset->add_option("--classes", d_classes, "comma-separated class names (default all)");
  subset->add_option("--features", d_features, "comma-separated descriptors (default all)");
  subset->add_option("--features-file", d_features_file, "file with one descriptor per line");
  subset->add_option("--out", d_out)->required();

  // train / crossval / test
  ModelFlags train_flags, cv_flags;
  std::string t_dataset, t_out, t_weighting = "balanced", t_scaling = "zscore";
  std::optional<std::string> t_results;
  std::vector<double> t_split{0.0, 1.0}, t_percents{80.0, 20.0};
  std::uint64_t t_seed = 0;
  auto* train = app.add_subcommand("train", "train a decision machine");
  train_flags.attach(train);
  train->add_option("--dataset", t_dataset)->required();
  train->add_option("--split", t_split, "start,end fractions of the train/validation slice")->delimiter(',');
  train->add_option("--percents", t_percents, "train,validation percents")->delimiter(',');
  train->add_option("--weighting", t_weighting, "balanced|uniform");
  train->add_option("--scaling", t_scaling, "zscore|minmax|none");
  train->add_option("--seed", t_seed);
  train->add_option("--out", t_out, "model path")->required();
  train->add_option("--results", t_results, "machine-readable results file");

  std::string cv_dataset, cv_weighting = "balanced", cv_scaling = "zscore";
  std::size_t cv_k = 5;
  std::vector<double> cv_percents{85.0, 15.0};
  std::uint64_t cv_seed = 0;
  std::optional<std::string> cv_results;
  auto* crossval = app.add_subcommand("crossval", "K-fold cross-validation");
  cv_flags.attach(crossval);
  crossval->add_option("--dataset", cv_dataset)->required();
  crossval->add_option("--k,--folds", cv_k, "number of folds");
  crossval->add_option("--weighting", cv_weighting);
  crossval->add_option("--scaling", cv_scaling);
  crossval->add_option("--percents", cv_percents, "train,validation carve-out for tree/nn")->delimiter(',');
  crossval->add_option("--seed", cv_seed);
  crossval->add_option("--results", cv_results);

  std::string test_model, test_dataset, test_weighting = "balanced";
  std::vector<double> test_range{0.0, 1.0};
  std::optional<std::string> test_results;
  auto* test = app.add_subcommand("test", "test a trained machine on a compatible dataset");
  test->add_option("--model", test_model)->required();
  test->add_option("--dataset", test_dataset)->required();
  test->add_option("--range", test_range, "start,end fractions")->delimiter(',');
  test->add_option("--weighting", test_weighting);
  test->add_option("--results", test_results);

  // select
  std::string s_method = "embedded", s_dataset, s_out, s_weighting = "balanced";
  std::optional<double> s_threshold;
  std::size_t s_k = 5;
  std::optional<std::size_t> s_max;
  double s_min_leaf = 0.001;
  std::vector<double> s_split{0.0, 1.0}, s_percents{80.0, 20.0};
  std::uint64_t s_seed = 0;
  auto* sel = app.add_subcommand("select", "feature selection");
  sel->add_option("--method", s_method, "embedded|wrapper");
  sel->add_option("--dataset", s_dataset)->required();
  sel->add_option("--threshold", s_threshold, "embedded: keep features scoring above this");
  sel->add_option("--k", s_k, "wrapper: folds");
  sel->add_option("--max-features", s_max, "wrapper: stop after this many features");
  sel->add_option("--min-leaf", s_min_leaf, "embedded: tree minimum leaf fraction");
  sel->add_option("--split", s_split)->delimiter(',');
  sel->add_option("--percents", s_percents)->delimiter(',');
  sel->add_option("--weighting", s_weighting);
  sel->add_option("--seed", s_seed);
  sel->add_option("--out", s_out, "sub-dataset with the chosen features")->required();

  // show
  std::string show_path;
  auto* show = app.add_subcommand("show", "print the header of any fragkit artifact");
  show->add_option("file", show_path)->required();

  // plot
  auto* plot = app.add_subcommand("plot", "emit plot data (TSV + SVG)");
  plot->require_subcommand(1);
  std::string p_dataset, p_features, p_classes, p_prefix;
  std::size_t p_bins = 20;
  std::vector<std::string> p_groups;
  auto* hist = plot->add_subcommand("histogram", "per-class histograms of features");
  hist->add_option("--dataset", p_dataset)->required();
  hist->add_option("--features", p_features, "comma-separated descriptors")->required();
  hist->add_option("--classes", p_classes, "comma-separated class names (default all)");
  hist->add_option("--bins", p_bins);
  hist->add_option("--out", p_prefix, "output path prefix")->required();
  auto* scatter = plot->add_subcommand("scatter", "2-D or 3-D scatter of class groups");
  scatter->add_option("--dataset", p_dataset)->required();
  scatter->add_option("--features", p_features, "2 or 3 comma-separated descriptors")->required();
  scatter->add_option("--group", p_groups, "NAME=CLASS1,CLASS2 or a class name (repeatable)");
  scatter->add_option("--out", p_prefix, "output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (fragment->parsed()) {
      cmd.fragment(corpus, out_dir, ex);
    } else if (import->parsed()) {
      cmd.import_raw(raw, import_size, import_class, import_out);
    } else if (extract->parsed()) {
      cmd.extract(config_path, preset, machine_path, archive_paths, extract_out);
    } else if (permute->parsed()) {
      cmd.permute(d_in, d_seed, d_out);
    } else if (expand->parsed()) {
      cmd.expand(d_a, d_b, d_out);
    } else if (merge->parsed()) {
      cmd.merge(d_in, d_groups, d_out);
    } else if (subset->parsed()) {
      cmd.subset(d_in, d_classes, d_features, d_features_file, d_out);
    } else if (train->parsed()) {
      cmd.train(train_flags, t_dataset, make_split(t_split, t_percents), t_weighting, t_scaling, t_seed, t_out,
                t_results);
    } else if (test->parsed()) {
      cmd.test(test_model, test_dataset, test_range, test_weighting, test_results);
    } else if (crossval->parsed()) {
      cmd.crossval(cv_flags, cv_dataset, cv_k, cv_weighting, cv_scaling, cv_percents, cv_seed, cv_results);
    } else if (sel->parsed()) {
      cmd.select(s_method, s_dataset, s_threshold, s_k, s_max, s_min_leaf, make_split(s_split, s_percents),
                 s_weighting, s_seed, s_out);
    } else if (show->parsed()) {
      cmd.show(show_path);
    } else if (hist->parsed()) {
      cmd.histogram(p_dataset, p_features, p_classes, p_bins, p_prefix);
    } else if (scatter->parsed()) {
      cmd.scatter(p_dataset, p_features, p_groups, p_prefix);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace fragkit::cli
