// ocpad: generate synthetic captures, train one-class autoencoders, score,
// fit latent-space baselines and evaluate detection error rates.

#include <cstdio>
#include <ctime>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ocpad/baselines/gmm.hpp"
#include "ocpad/baselines/ocsvm.hpp"
#include "ocpad/config.hpp"
#include "ocpad/core/checksum.hpp"
#include "ocpad/dataset/container.hpp"
#include "ocpad/dataset/split.hpp"
#include "ocpad/eval/det_export.hpp"
#include "ocpad/eval/fusion.hpp"
#include "ocpad/eval/report.hpp"
#include "ocpad/models/checkpoint.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ocpad;

namespace {

// Flags shared by every subcommand. Values are applied on top of the config
// file in a fixed order, so the resolved config does not depend on flag order.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> shorthands;  // config key, value
};

struct Shorthand {
  const char* flag;
  const char* key;
  const char* help;
};

void add_common(CLI::App* app, Common& c, std::map<std::string, std::string>& values,
                std::initializer_list<Shorthand> extra) {
  app->add_option("--config", c.config_path, "key = value config file");
  app->add_option("--seed", c.seed, "master seed (falls back to $OC_SEED, then the config)");
  app->add_option("--jobs", c.jobs, "worker threads for scoring")->check(CLI::PositiveNumber);
  app->add_option("--set", c.sets, "override a config key, e.g. --set epochs=20")->take_all();
  for (const auto& s : extra) app->add_option(s.flag, values[s.key], s.help);
}

ExperimentConfig resolve(const Common& c, const std::map<std::string, std::string>& shorthand) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg = load_config(c.config_path);
  if (const char* env = std::getenv("OC_SEED"); env && *env) set_config_value(cfg, "seed", env);
  if (c.seed) cfg.seed = *c.seed;
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [key, value] : shorthand)
    if (!value.empty()) set_config_value(cfg, key, value);
  return cfg;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
  }
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// A data argument may name a container or a gen output directory.
fs::path container_path(const fs::path& data, const char* split) {
  if (fs::is_directory(data)) return data / (std::string(split) + ".ocpd");
  return data;
}

json split_counts(const dataset::SampleSet& s) {
  json j;
  j["samples"] = s.size();
  j["bonafide"] = s.count(Label::bonafide);
  j["attack"] = s.count(Label::attack);
  std::map<std::string, std::size_t> species;
  std::set<std::string> subjects;
  for (const auto& i : s.infos()) {
    ++species[i.species];
    subjects.insert(i.subject_id);
  }
  j["subjects"] = subjects.size();
  j["species"] = species;
  return j;
}

// ---- gen -------------------------------------------------------------------

int cmd_gen(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const auto all = dataset::generate(cfg.generator());
  const auto split = dataset::split_by_subject(all, {}, cfg.seed);
  json manifest;
  manifest["seed"] = cfg.seed;
  manifest["image_shape"] = {cfg.channels, cfg.height, cfg.width};
  json splits, files;
  const std::pair<const char*, const dataset::SampleSet*> parts[] = {
      {"train", &split.train}, {"val", &split.validation}, {"test", &split.test}};
  for (const auto& [name, set] : parts) {
    const auto bytes = dataset::container_bytes(*set);
    const fs::path file = out / (std::string(name) + ".ocpd");
    bytes.write_file(file);
    splits[name] = split_counts(*set);
    files[file.filename().string()] = {{"bytes", bytes.bytes().size()}, {"fnv1a64", hex64(fnv1a64(bytes.bytes()))}};
  }
  manifest["splits"] = splits;
  manifest["files"] = files;
  manifest["config"] = serialize_config(cfg);
  manifest["ignorable"] = {{"generated_at", utc_now()}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::printf("wrote %zu train, %zu val, %zu test samples to %s\n", split.train.size(), split.validation.size(),
              split.test.size(), out.string().c_str());
  return 0;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const ExperimentConfig& cfg, const fs::path& data, const fs::path& out, fs::path log) {
  const auto train_set = dataset::load_container(container_path(data, "train"));
  const auto val_set = dataset::load_container(container_path(data, "val"));
  auto arch = cfg.architecture();
  arch.channels = train_set.channels();
  arch.height = train_set.height();
  arch.width = train_set.width();
  const models::AEModel initial(arch, cfg.loss_config(), derive_seed(cfg.seed, "model"));
  if (log.empty()) log = fs::path(out).replace_extension(".epochs.csv");
  std::ostringstream csv;
  csv << "epoch,train_loss,val_loss\n";
  const auto result = models::train(initial, train_set, val_set, cfg.train_options(), [&](const models::EpochRecord& r) {
    csv << r.epoch << ',' << eval::detail::format_double(r.train_loss) << ',' << eval::detail::format_double(r.val_loss)
        << '\n';
    std::fprintf(stderr, "epoch %zu  train %.6g  val %.6g\n", r.epoch, r.train_loss, r.val_loss);
  });
  ensure_parent(out);
  models::save_checkpoint(result.model, out);
  write_text(log, csv.str());
  const auto& md = result.model.metadata();
  std::printf("best epoch %zu, val loss %.6g (initial %.6g, final %.6g)\n", md.best_epoch, md.best_val_loss,
              result.trace.front().val_loss, md.final_val_loss);
  return 0;
}

// ---- score / latent ----------------------------------------------------------

int cmd_score(const fs::path& model_path, const fs::path& data, const fs::path& out, std::size_t jobs) {
  const auto model = models::load_checkpoint(model_path);
  const auto set = dataset::load_container(container_path(data, "test"));
  const auto scores = eval::make_score_set(set.infos(), models::score_all(model, set, jobs));
  ensure_parent(out);
  eval::write_scores_csv(scores, out);
  std::printf("scored %zu samples\n", scores.size());
  return 0;
}

int cmd_latent(const fs::path& model_path, const fs::path& data, const fs::path& out, std::size_t jobs) {
  const auto model = models::load_checkpoint(model_path);
  const auto set = dataset::load_container(container_path(data, "test"));
  const auto codes = models::latent_all(model, set, jobs);
  baselines::FeatureSet f;
  f.dim = model.latent_width();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& info = set.info(i);
    f.add({info.sample_id, info.label, info.species, std::vector<double>(codes[i].begin(), codes[i].end())});
  }
  ensure_parent(out);
  baselines::write_features_csv(f, out);
  std::printf("wrote %zu latent vectors of width %zu\n", f.size(), f.dim);
  return 0;
}

// ---- fit-oc ------------------------------------------------------------------

std::vector<std::vector<double>> bonafide_matrix(const baselines::FeatureSet& f, const char* what) {
  std::vector<std::vector<double>> x;
  for (const auto& r : f.records) {
    if (r.label == Label::attack)
      throw ContractError(std::string(what) + " contains attack sample '" + r.sample_id +
                          "'; one-class baselines are fitted on bona fide samples only");
    x.push_back(r.values);
  }
  if (x.empty()) throw ContractError(std::string(what) + " has no samples");
  return x;
}

template <class Classifier>
eval::ScoreSet score_features(const Classifier& c, const baselines::FeatureSet& f) {
  eval::ScoreSet s;
  for (const auto& r : f.records) s.records.push_back({r.sample_id, r.label, r.species, c.score(r.values)});
  return s;
}

int cmd_fit_oc(const ExperimentConfig& cfg, const std::string& kind, const fs::path& features, const fs::path& val,
               const fs::path& score_path, const fs::path& out) {
  const auto train = baselines::read_features_csv(features);
  const auto x = bonafide_matrix(train, "training feature set");
  const baselines::FeatureSet target = score_path.empty() ? train : baselines::read_features_csv(score_path);
  if (target.dim != train.dim)
    throw ContractError("scored features have width " + std::to_string(target.dim) + ", training features " +
                        std::to_string(train.dim));
  std::optional<baselines::FeatureSet> val_set;
  if (!val.empty()) {
    val_set = baselines::read_features_csv(val);
    if (val_set->dim != train.dim) throw ContractError("validation features differ in width from training features");
  }
  json summary;
  summary["method"] = kind;
  summary["train_samples"] = x.size();
  auto sweep = json::array();
  eval::ScoreSet scores;

  if (kind == "gmm") {
    std::vector<std::size_t> grid{cfg.gmm_components};
    if (val_set) grid = {1, 2, 4, 8, 16};
    double best = 2.0;
    baselines::GmmClassifier chosen;
    for (std::size_t k : grid) {
      if (k > x.size()) continue;
      auto opt = cfg.gmm_options();
      opt.components = k;
      auto c = baselines::fit_gmm_classifier(x, opt);
      double eer = -1.0;
      if (val_set) {
        eer = eval::d_eer(score_features(c, *val_set)).eer;
        sweep.push_back({{"components", k}, {"val_d_eer", eer}});
      }
      if (!val_set || eer < best) {
        best = eer;
        chosen = std::move(c);
        summary["components"] = k;
      }
    }
    scores = score_features(chosen, target);
  } else if (kind == "svm") {
    std::vector<std::pair<double, double>> grid{{cfg.svm_nu, cfg.svm_gamma}};
    if (val_set) {
      const double g0 = cfg.svm_gamma > 0 ? cfg.svm_gamma : baselines::default_gamma(baselines::Standardizer::fit(x).apply(x));
      grid.clear();
      for (double nu : {0.01, 0.05, 0.1, 0.2, 0.5})
        for (double gs : {0.25, 1.0, 4.0}) grid.push_back({nu, g0 * gs});
    }
    double best = 2.0;
    baselines::OcSvmClassifier chosen;
    for (const auto& [nu, gamma] : grid) {
      auto opt = cfg.svm_options();
      opt.nu = nu;
      opt.gamma = gamma;
      auto c = baselines::fit_ocsvm_classifier(x, opt);
      double eer = -1.0;
      if (val_set) {
        eer = eval::d_eer(score_features(c, *val_set)).eer;
        sweep.push_back({{"nu", nu}, {"gamma", c.model.gamma}, {"val_d_eer", eer}});
      }
      if (!val_set || eer < best) {
        best = eer;
        summary["nu"] = nu;
        summary["gamma"] = c.model.gamma;
        chosen = std::move(c);
      }
    }
    scores = score_features(chosen, target);
  } else {
    throw UsageError("fit-oc expects gmm or svm, got '" + kind + "'");
  }
  if (val_set) summary["sweep"] = sweep;
  ensure_parent(out);
  eval::write_scores_csv(scores, out);
  write_text(fs::path(out).replace_extension(".json"), summary.dump(2) + "\n");
  std::printf("%s scored %zu samples\n", kind.c_str(), scores.size());
  return 0;
}

// ---- eval ----------------------------------------------------------------------

std::string weight_label(double w) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", w);
  return buf;
}

int cmd_eval(const fs::path& scores_path, const fs::path& fuse_path, std::optional<double> weight, bool svg,
             const fs::path& norm_a, const fs::path& norm_b, const fs::path& out) {
  if (fuse_path.empty() && weight) throw UsageError("--w requires --fuse");
  if (fuse_path.empty() && !norm_b.empty()) throw UsageError("--norm-b requires --fuse");
  const auto a = eval::read_scores_csv(scores_path);
  a.validate();
  ensure_dir(out);
  if (fuse_path.empty()) {
    const auto r = eval::make_report(a);
    write_text(out / "report.json", eval::to_json(r).dump(2) + "\n");
    std::ofstream det(out / "det.csv", std::ios::binary | std::ios::trunc);
    eval::write_det_csv(r.curve, det);
    if (svg) write_text(out / "det.svg", eval::det_svg({{scores_path.stem().string(), &r.curve}}));
    std::printf("D-EER %.4f%%  pAUC20 %.4f%%\n", 100 * r.eer.eer, 100 * r.pauc20);
    return 0;
  }
  const auto b = eval::read_scores_csv(fuse_path);
  b.validate();
  const auto sa = eval::norm_stats(norm_a.empty() ? a : eval::read_scores_csv(norm_a));
  const auto sb = eval::norm_stats(norm_b.empty() ? b : eval::read_scores_csv(norm_b));
  std::vector<double> weights;
  if (weight)
    weights = {*weight};
  else
    for (int k = 0; k <= 10; ++k) weights.push_back(k / 10.0);

  json sweep = json::array();
  std::ostringstream csv;
  csv << "w,d_eer,pauc20";
  for (double t : eval::kReportBpcerTargets) csv << ",apcer_at_bpcer_" << eval::detail::format_double(t);
  csv << '\n';
  std::vector<eval::Report> reports;
  for (double w : weights) {
    const auto fused = eval::fuse(a, b, w, sa, sb);
    reports.push_back(eval::make_report(fused.scores));
    const auto& r = reports.back();
    json j = eval::to_json(r);
    json entry;
    entry["w"] = w;
    for (auto it = j.begin(); it != j.end(); ++it) entry[it.key()] = it.value();
    sweep.push_back(entry);
    csv << eval::detail::format_double(w) << ',' << eval::detail::format_double(r.eer.eer) << ','
        << eval::detail::format_double(r.pauc20);
    for (const auto& op : r.operating_points) csv << ',' << eval::detail::format_double(op.point.apcer);
    csv << '\n';
    std::ofstream det(out / ("det_w" + weight_label(w) + ".csv"), std::ios::binary | std::ios::trunc);
    eval::write_det_csv(r.curve, det);
    std::printf("w=%.2f  D-EER %.4f%%  pAUC20 %.4f%%\n", w, 100 * r.eer.eer, 100 * r.pauc20);
  }
  json doc;
  doc["scores"] = scores_path.filename().string();
  doc["fused_with"] = fuse_path.filename().string();
  doc["degenerate_normalization"] = {sa.degenerate(), sb.degenerate()};
  doc["sweep"] = sweep;
  write_text(out / "fusion.json", doc.dump(2) + "\n");
  write_text(out / "fusion_sweep.csv", csv.str());
  if (svg) {
    std::vector<eval::NamedCurve> curves;
    for (std::size_t k = 0; k < weights.size(); ++k) curves.push_back({"w=" + weight_label(weights[k]), &reports[k].curve});
    write_text(out / "det.svg", eval::det_svg(curves));
  }
  return 0;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::usage: return 2;
    case ErrorKind::contract:
    case ErrorKind::format:
    case ErrorKind::io: return 3;
    case ErrorKind::numeric: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-class presentation attack detection with autoencoders"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ocpad 1.0");

  // gen
  Common gen_c;
  std::map<std::string, std::string> gen_v;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "generate a synthetic data set split into train/val/test containers");
  add_common(gen, gen_c, gen_v,
             {{"--channels", "channels", "3 (laser) or 4 (SWIR)"},
              {"--bonafide", "bonafide_count", "bona fide samples"},
              {"--attacks-per-species", "attacks_per_species", "samples per attack species"}});
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  Common train_c;
  std::map<std::string, std::string> train_v;
  std::string train_data, train_out, train_log;
  auto* train = app.add_subcommand("train", "train an autoencoder on the bona fide training split");
  add_common(train, train_c, train_v,
             {{"--arch", "arch", "conv, pooling or dense"},
              {"--loss", "loss", "mse, ishii or wmse"},
              {"--c", "c", "pixel threshold multiplier of wmse"},
              {"--alpha", "alpha", "sample quantile of ishii"},
              {"--epochs", "epochs", "training epochs"},
              {"--batch-size", "batch_size", "mini-batch size"},
              {"--lr", "learning_rate", "RMSprop learning rate"}});
  train->add_option("--data", train_data, "gen output directory")->required();
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--log", train_log, "epoch loss CSV (default: next to the checkpoint)");

  // score
  Common score_c;
  std::map<std::string, std::string> score_v;
  std::string score_model, score_data, score_out;
  auto* score = app.add_subcommand("score", "write per-sample reconstruction error scores");
  add_common(score, score_c, score_v, {});
  score->add_option("--model", score_model, "checkpoint")->required();
  score->add_option("--data", score_data, "container, or gen directory (uses test split)")->required();
  score->add_option("--out", score_out, "score CSV")->required();

  // latent
  Common lat_c;
  std::map<std::string, std::string> lat_v;
  std::string lat_model, lat_data, lat_out;
  auto* latent = app.add_subcommand("latent", "write encoder outputs as a feature CSV");
  add_common(latent, lat_c, lat_v, {});
  latent->add_option("--model", lat_model, "checkpoint")->required();
  latent->add_option("--data", lat_data, "container, or gen directory (uses test split)")->required();
  latent->add_option("--out", lat_out, "feature CSV")->required();

  // fit-oc
  Common oc_c;
  std::map<std::string, std::string> oc_v;
  std::string oc_kind, oc_features, oc_val, oc_score, oc_out;
  auto* fit = app.add_subcommand("fit-oc", "fit a one-class GMM or SVM on bona fide features and score");
  add_common(fit, oc_c, oc_v,
             {{"--components", "gmm_components", "GMM components"},
              {"--nu", "svm_nu", "OC-SVM nu"},
              {"--gamma", "svm_gamma", "OC-SVM RBF gamma (0: automatic)"}});
  fit->add_option("method", oc_kind, "gmm or svm")->required()->check(CLI::IsMember({"gmm", "svm"}));
  fit->add_option("--features", oc_features, "bona fide training features")->required();
  fit->add_option("--val", oc_val, "labeled validation features; enables the hyperparameter sweep");
  fit->add_option("--score", oc_score, "features to score (default: the training features)");
  fit->add_option("--out", oc_out, "score CSV")->required();

  // eval
  std::string ev_scores, ev_fuse, ev_out, ev_norm_a, ev_norm_b;
  std::optional<double> ev_w;
  bool ev_svg = false;
  auto* ev = app.add_subcommand("eval", "error rates, DET curve and optional fusion sweep");
  ev->add_option("--scores", ev_scores, "score CSV")->required();
  ev->add_option("--fuse", ev_fuse, "second score CSV for weighted fusion");
  ev->add_option("--w", ev_w, "single fusion weight of the first input (default: sweep 0, 0.1, .., 1)")
      ->check(CLI::Range(0.0, 1.0));
  ev->add_option("--norm-a", ev_norm_a, "reference scores for normalizing the first input");
  ev->add_option("--norm-b", ev_norm_b, "reference scores for normalizing the second input");
  ev->add_flag("--svg", ev_svg, "also write det.svg");
  ev->add_option("--out", ev_out, "report directory")->required();

  // show-config
  Common sc_c;
  std::map<std::string, std::string> sc_v;
  auto* show = app.add_subcommand("show-config", "print the resolved configuration");
  add_common(show, sc_c, sc_v, {});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(resolve(gen_c, gen_v), gen_out);
    if (*train) return cmd_train(resolve(train_c, train_v), train_data, train_out, train_log);
    if (*score) {
      resolve(score_c, score_v);
      return cmd_score(score_model, score_data, score_out, score_c.jobs);
    }
    if (*latent) {
      resolve(lat_c, lat_v);
      return cmd_latent(lat_model, lat_data, lat_out, lat_c.jobs);
    }
    if (*fit) return cmd_fit_oc(resolve(oc_c, oc_v), oc_kind, oc_features, oc_val, oc_score, oc_out);
    if (*ev) return cmd_eval(ev_scores, ev_fuse, ev_w, ev_svg, ev_norm_a, ev_norm_b, ev_out);
    if (*show) {
      std::fputs(serialize_config(resolve(sc_c, sc_v)).c_str(), stdout);
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "ocpad: %s\n", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ocpad: internal error: %s\n", e.what());
    return 1;
  }
  return 2;
}
