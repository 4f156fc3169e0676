#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ltrel/data.hpp"
#include "ltrel/losses.hpp"
#include "ltrel/metrics.hpp"
#include "ltrel/model.hpp"
#include "ltrel/relmix.hpp"
#include "ltrel/semsim.hpp"
#include "ltrel/synth.hpp"
#include "ltrel/taxonomy.hpp"
#include "ltrel/trainer.hpp"
#include "ltrel/vocab.hpp"

namespace ltrel::cli {

constexpr const char* kToolVersion = "0.1.0";

/// Raised for problems the user can fix (bad paths, bad flag combinations).
struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_exists(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path))
    throw UserError(std::string(what) + " not found: " + path);
}

inline void write_manifest(const std::string& path, const std::string& command,
                           const nlohmann::json& options) {
  nlohmann::json m{{"tool", "ltrel"},
                   {"version", kToolVersion},
                   {"command", command},
                   {"options", options}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << m.dump(2) << '\n';
}

inline nlohmann::json band_json(const BandReport& r) {
  auto cell = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return nlohmann::json{{"many", cell(r.many)},
                        {"medium", cell(r.medium)},
                        {"few", cell(r.few)},
                        {"all", cell(r.all)}};
}

inline SimilarityMatrix load_simmat(const std::string& path,
                                    const ClassVocabulary& vocab) {
  require_exists(path, "similarity matrix");
  SimilarityMatrix m = path.size() > 4 &&
                               path.compare(path.size() - 4, 4, ".csv") == 0
                           ? load_similarity_csv(path)
                           : load_similarity_bin(path);
  return align_similarity(m, vocab);
}

inline std::vector<int> parse_int_list(const std::string& s,
                                       const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument("trailing chars");
    } catch (const std::exception&) {
      throw UserError(std::string("bad ") + what + " value: '" + tok + "'");
    }
  }
  if (out.empty()) throw UserError(std::string("empty ") + what + " list");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s,
                                             const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument("trailing chars");
    } catch (const std::exception&) {
      throw UserError(std::string("bad ") + what + " value: '" + tok + "'");
    }
  }
  if (out.empty()) throw UserError(std::string("empty ") + what + " list");
  return out;
}

/// Soft-AP rows over prediction records for one similarity matrix and branch.
inline void append_soft_ap_rows(std::vector<SoftApRow>& rows,
                                const std::vector<PredictionRecord>& recs,
                                const SimilarityMatrix& sim, char branch,
                                int t_rel, const std::vector<int>& cutoffs) {
  std::vector<std::vector<int>> lists;
  std::vector<int> golds;
  lists.reserve(recs.size());
  golds.reserve(recs.size());
  for (const auto& r : recs) {
    switch (branch) {
      case 's': lists.push_back(r.rank_s); golds.push_back(r.gold_s); break;
      case 'r': lists.push_back(r.rank_r); golds.push_back(r.gold_r); break;
      default: lists.push_back(r.rank_o); golds.push_back(r.gold_o); break;
    }
  }
  std::vector<double> ap = mean_soft_ap(lists, golds, sim, t_rel, cutoffs);
  const char* name = branch == 's' ? "subject" : branch == 'r' ? "relation"
                                                               : "object";
  for (std::size_t i = 0; i < cutoffs.size(); ++i)
    rows.push_back({std::string(name) + ":" + sim.metric_name, cutoffs[i],
                    ap[i]});
}

struct ReportPaths {
  std::string report, triplet, soft_ap;
};

/// Writes report.csv / triplet_report.csv (or .json) plus optional soft AP.
inline void write_reports(const std::string& out_dir, const std::string& format,
                          const BandReport& subject, const BandReport& object,
                          const BandReport& sbj_obj, const BandReport& relation,
                          const TripletEval& triplet, double pair_so,
                          double pair_sr, double pair_or,
                          const std::vector<SoftApRow>* soft_rows) {
  auto p = [&](const char* name) { return out_dir + "/" + name; };
  if (format == "json") {
    nlohmann::json rep{{"subject", band_json(subject)},
                       {"object", band_json(object)},
                       {"sbj_obj", band_json(sbj_obj)},
                       {"relation", band_json(relation)}};
    std::ofstream out(p("report.json"));
    out << rep.dump(2) << '\n';
    auto cell = [](const std::optional<double>& v) {
      return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    nlohmann::json trip{{"triplet_per_type",
                         {{"many", cell(triplet.many)},
                          {"medium", cell(triplet.medium)},
                          {"few", cell(triplet.few)},
                          {"all", cell(triplet.all)}}},
                        {"triplet_per_example", triplet.overall_pct},
                        {"pair_s_o", pair_so},
                        {"pair_s_r", pair_sr},
                        {"pair_o_r", pair_or}};
    std::ofstream tout(p("triplet_report.json"));
    tout << trip.dump(2) << '\n';
    if (soft_rows) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : *soft_rows)
        arr.push_back({{"metric", r.metric}, {"cutoff", r.cutoff}, {"ap", r.ap}});
      std::ofstream sout(p("soft_ap.json"));
      sout << arr.dump(2) << '\n';
    }
  } else {
    save_band_report_csv(subject, object, sbj_obj, relation, p("report.csv"));
    save_triplet_report_csv(triplet, pair_so, pair_sr, pair_or,
                            p("triplet_report.csv"));
    if (soft_rows) save_soft_ap_csv(*soft_rows, p("soft_ap.csv"));
  }
}

}  // namespace detail

// --- subcommand options ------------------------------------------------------

struct GenArgs {
  GenConfig cfg;
  std::string out;
};

struct TrainArgs {
  std::string data, out, config_path;
  std::string loss = "softmax";
  std::string weight_mode = "inverse";
  std::string init_embeddings = "random";
  std::string relmix_band = "relation";
  double gamma = -1.0;  // <0: default per loss choice
  double focal_gamma = 2.0;
  bool relmix = false;
  double eta = 0.5, lambda_min = 0.7, lambda_max = 0.8, alpha_p = 0.5;
  bool no_same_scene = false;
  double lr = 0.01, momentum = 0.0;
  int batch_size = 32, epochs = 10, eval_every = 1;
  int d_emb = 32, hidden = 0;
  bool normalize = false;
  std::uint64_t seed = 0;
};

inline TrainConfig resolve_train_config(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config_path.empty()) {
    detail::require_exists(a.config_path, "train config");
    std::ifstream in(a.config_path);
    nlohmann::json j;
    in >> j;
    cfg = train_config_from_json(j);
  }
  if (a.loss == "softmax") {
    cfg.loss_kind = LossKind::triplet_softmax;
  } else if (a.loss == "weighted") {
    cfg.loss_kind = LossKind::weighted;
  } else if (a.loss == "focal") {
    cfg.loss_kind = LossKind::focal;
  } else if (a.loss == "vilhub") {
    cfg.loss_kind = LossKind::triplet_softmax;
    cfg.gamma_vilhub = 1.0;  // enabled; --gamma overrides below
  } else {
    throw UserError("unknown loss '" + a.loss +
                    "' (choose softmax, weighted, focal, vilhub)");
  }
  if (a.gamma >= 0.0) cfg.gamma_vilhub = a.gamma;
  cfg.gamma_focal = a.focal_gamma;
  cfg.weight_mode = weight_mode_from_string(a.weight_mode);
  cfg.init_embeddings = embed_init_from_string(a.init_embeddings);
  cfg.use_relmix = a.relmix;
  cfg.relmix.eta = a.eta;
  cfg.relmix.lambda_min = a.lambda_min;
  cfg.relmix.lambda_max = a.lambda_max;
  cfg.relmix.alpha_p = a.alpha_p;
  cfg.relmix.band_by = a.relmix_band == "entity"
                           ? RelMixConfig::BandBy::entity
                           : RelMixConfig::BandBy::relation;
  cfg.relmix.same_scene = !a.no_same_scene;
  cfg.lr = a.lr;
  cfg.momentum = a.momentum;
  cfg.batch_size = a.batch_size;
  cfg.epochs = a.epochs;
  cfg.eval_every = a.eval_every;
  cfg.d_emb = a.d_emb;
  cfg.hidden = a.hidden;
  cfg.normalize = a.normalize;
  cfg.seed = a.seed;
  validate_train_config(cfg);
  return cfg;
}

namespace detail {

inline TrainResult run_training(const DataDir& dd, const TrainConfig& cfg) {
  TrainInputs in;
  in.train = &dd.train;
  in.val = &dd.val;
  in.vocab_ent = &dd.vocab_ent;
  in.vocab_rel = &dd.vocab_rel;
  in.bands_ent = &dd.bands_ent;
  in.bands_rel = &dd.bands_rel;
  if (cfg.init_embeddings != EmbedInit::random) {
    if (!dd.has_embeddings)
      throw UserError(
          "word-vector initialization requested but the dataset directory has "
          "no embed_ent.txt/embed_rel.txt");
    in.embed_ent = &dd.embed_ent;
    in.embed_rel = &dd.embed_rel;
  }
  return train(in, cfg);
}

}  // namespace detail

// --- run ----------------------------------------------------------------------

inline int run(const std::vector<std::string>& args) {
  CLI::App app{"long-tail subject/relation/object classification toolkit"};
  app.require_subcommand(1);

  // gen-data ------------------------------------------------------------------
  GenArgs gen;
  CLI::App* cmd_gen =
      app.add_subcommand("gen-data", "generate a synthetic dataset directory");
  cmd_gen->add_option("--k-ent", gen.cfg.k_ent, "entity classes");
  cmd_gen->add_option("--k-rel", gen.cfg.k_rel, "relation classes");
  cmd_gen->add_option("--zipf", gen.cfg.zipf_s, "label skew exponent");
  cmd_gen->add_option("--d-in", gen.cfg.d_in, "feature dimension");
  cmd_gen->add_option("--sigma", gen.cfg.noise_sigma, "feature noise");
  cmd_gen->add_option("--n-train", gen.cfg.n_train, "training examples");
  cmd_gen->add_option("--n-val", gen.cfg.n_val, "validation examples");
  cmd_gen->add_option("--n-test", gen.cfg.n_test, "test examples");
  cmd_gen->add_option("--scene-mean", gen.cfg.scene_mean,
                      "mean triplets per scene");
  cmd_gen->add_option("--rel-noise", gen.cfg.relation_noise,
                      "relation label noise rate");
  cmd_gen->add_option("--seed", gen.cfg.seed, "generator seed");
  cmd_gen->add_option("--out", gen.out, "output directory")->required();

  // train ----------------------------------------------------------------------
  TrainArgs ta;
  CLI::App* cmd_train = app.add_subcommand("train", "train a model");
  cmd_train->add_option("--data", ta.data, "dataset directory")->required();
  cmd_train->add_option("--out", ta.out, "output directory")->required();
  cmd_train->add_option("--config", ta.config_path, "train config JSON");
  cmd_train->add_option("--loss", ta.loss,
                        "softmax | weighted | focal | vilhub");
  cmd_train->add_option("--gamma", ta.gamma, "balancing term weight");
  cmd_train->add_option("--focal-gamma", ta.focal_gamma, "focusing exponent");
  cmd_train->add_option("--weight-mode", ta.weight_mode, "uniform | inverse");
  cmd_train->add_flag("--relmix", ta.relmix, "enable triplet interpolation");
  cmd_train->add_option("--eta", ta.eta, "synthetic examples per real one");
  cmd_train->add_option("--lambda-min", ta.lambda_min, "mixing floor");
  cmd_train->add_option("--lambda-max", ta.lambda_max, "mixing ceiling");
  cmd_train->add_option("--alpha-p", ta.alpha_p, "donor choice probability");
  cmd_train->add_option("--relmix-band", ta.relmix_band, "relation | entity");
  cmd_train->add_flag("--no-same-scene", ta.no_same_scene,
                      "sample mixing partners dataset-wide");
  cmd_train->add_option("--lr", ta.lr, "learning rate");
  cmd_train->add_option("--momentum", ta.momentum, "SGD momentum");
  cmd_train->add_option("--batch-size", ta.batch_size, "batch size");
  cmd_train->add_option("--epochs", ta.epochs, "training epochs");
  cmd_train->add_option("--eval-every", ta.eval_every,
                        "epochs between validation passes (0 = never)");
  cmd_train->add_option("--d-emb", ta.d_emb, "joint space dimension");
  cmd_train->add_option("--hidden", ta.hidden, "hidden layer width (0 = none)");
  cmd_train->add_flag("--normalize", ta.normalize, "cosine scoring");
  cmd_train->add_option("--init-embeddings", ta.init_embeddings,
                        "random | copy | affine");
  cmd_train->add_option("--seed", ta.seed, "training seed");

  // eval -----------------------------------------------------------------------
  struct {
    std::string model, data, split = "test", out, format = "csv";
    std::string simmat_ent, simmat_rel, cutoffs = "1,5,20,50";
    int topk = 250, ap_t = 5;
  } ea;
  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  cmd_eval->add_option("--model", ea.model, "checkpoint path")->required();
  cmd_eval->add_option("--data", ea.data, "dataset directory")->required();
  cmd_eval->add_option("--split", ea.split, "train | val | test");
  cmd_eval->add_option("--out", ea.out, "output directory")->required();
  cmd_eval->add_option("--topk", ea.topk, "ranking depth");
  cmd_eval->add_option("--format", ea.format, "csv | json");
  cmd_eval->add_option("--simmat-ent", ea.simmat_ent,
                       "entity similarity matrix (enables soft AP)");
  cmd_eval->add_option("--simmat-rel", ea.simmat_rel,
                       "relation similarity matrix (enables soft AP)");
  cmd_eval->add_option("--ap-T", ea.ap_t, "widening depth for soft AP");
  cmd_eval->add_option("--cutoffs", ea.cutoffs, "soft AP cutoffs");

  // report ---------------------------------------------------------------------
  struct {
    std::string preds, data, out, format = "csv";
    std::string simmat_ent, simmat_rel, cutoffs = "1,5,20,50";
    int ap_t = 5;
  } ra;
  CLI::App* cmd_report =
      app.add_subcommand("report", "recompute reports from saved predictions");
  cmd_report->add_option("--preds", ra.preds, "predictions JSONL")->required();
  cmd_report->add_option("--data", ra.data, "dataset directory")->required();
  cmd_report->add_option("--out", ra.out, "output directory")->required();
  cmd_report->add_option("--format", ra.format, "csv | json");
  cmd_report->add_option("--simmat-ent", ra.simmat_ent,
                         "entity similarity matrix (enables soft AP)");
  cmd_report->add_option("--simmat-rel", ra.simmat_rel,
                         "relation similarity matrix (enables soft AP)");
  cmd_report->add_option("--ap-T", ra.ap_t, "widening depth for soft AP");
  cmd_report->add_option("--cutoffs", ra.cutoffs, "soft AP cutoffs");

  // simmat ---------------------------------------------------------------------
  struct {
    std::string vocab, metric = "path", taxonomy, ic, embeddings, precomputed;
    std::string out, format = "csv";
    double jcn_cap = kDefaultJcnCap;
  } sa;
  CLI::App* cmd_simmat =
      app.add_subcommand("simmat", "build a class similarity matrix");
  cmd_simmat->add_option("--vocab", sa.vocab, "vocabulary TSV")->required();
  cmd_simmat->add_option("--metric", sa.metric,
                         "path | wup | lch | res | jcn | lin | cosine");
  cmd_simmat->add_option("--taxonomy", sa.taxonomy, "taxonomy edge TSV");
  cmd_simmat->add_option("--ic", sa.ic, "information content TSV");
  cmd_simmat->add_option("--embeddings", sa.embeddings, "word vector file");
  cmd_simmat->add_option("--precomputed", sa.precomputed,
                         "existing matrix to re-align");
  cmd_simmat->add_option("--jcn-cap", sa.jcn_cap, "cap for degenerate pairs");
  cmd_simmat->add_option("--out", sa.out, "output file")->required();
  cmd_simmat->add_option("--format", sa.format, "csv | bin");

  // gradcheck ------------------------------------------------------------------
  struct {
    int trials = 30;
    std::uint64_t seed = 0;
    double tol = 1e-5;
    std::string out;
  } ga;
  CLI::App* cmd_gc =
      app.add_subcommand("gradcheck", "verify analytic gradients against "
                                      "finite differences");
  cmd_gc->add_option("--trials", ga.trials, "random draws per scenario");
  cmd_gc->add_option("--seed", ga.seed, "rng seed");
  cmd_gc->add_option("--tol", ga.tol, "max relative error allowed");
  cmd_gc->add_option("--out", ga.out, "optional report directory");

  // sweep ----------------------------------------------------------------------
  struct {
    std::string data, out, gammas = "0,0.1,1,10,100", format = "csv";
  } swa;
  TrainArgs sta;  // training flags shared with `train`
  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep", "train across a balancing-weight grid and tabulate metrics");
  cmd_sweep->add_option("--data", swa.data, "dataset directory")->required();
  cmd_sweep->add_option("--out", swa.out, "output directory")->required();
  cmd_sweep->add_option("--gammas", swa.gammas, "comma-separated grid");
  cmd_sweep->add_option("--format", swa.format, "csv | json");
  cmd_sweep->add_option("--loss", sta.loss, "softmax | weighted | focal");
  cmd_sweep->add_option("--focal-gamma", sta.focal_gamma, "focusing exponent");
  cmd_sweep->add_option("--weight-mode", sta.weight_mode, "uniform | inverse");
  cmd_sweep->add_flag("--relmix", sta.relmix, "enable triplet interpolation");
  cmd_sweep->add_option("--eta", sta.eta, "synthetic examples per real one");
  cmd_sweep->add_option("--lr", sta.lr, "learning rate");
  cmd_sweep->add_option("--batch-size", sta.batch_size, "batch size");
  cmd_sweep->add_option("--epochs", sta.epochs, "training epochs");
  cmd_sweep->add_option("--d-emb", sta.d_emb, "joint space dimension");
  cmd_sweep->add_option("--hidden", sta.hidden, "hidden layer width");
  cmd_sweep->add_option("--seed", sta.seed, "training seed");

  std::vector<const char*> argv;
  argv.push_back("ltrel");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cmd_gen->parsed()) {
      SynthData d = generate_dataset(gen.cfg);
      write_dataset_dir(d, gen.cfg, gen.out);
      BandSizes be = split_band_sizes(gen.cfg.k_ent);
      BandSizes br = split_band_sizes(gen.cfg.k_rel);
      std::cout << "wrote " << gen.out << ": train=" << d.train.size()
                << " val=" << d.val.size() << " test=" << d.test.size()
                << " entity bands " << be.many << "/" << be.medium << "/"
                << be.few << " relation bands " << br.many << "/" << br.medium
                << "/" << br.few << "\n";
      return 0;
    }

    if (cmd_train->parsed()) {
      detail::require_exists(ta.data, "dataset directory");
      DataDir dd = load_data_dir(ta.data);
      TrainConfig cfg = resolve_train_config(ta);
      TrainResult res = detail::run_training(dd, cfg);
      std::filesystem::create_directories(ta.out);
      save_checkpoint(res.params, ta.out + "/model.ckpt");
      save_history_csv(res.history, "subject", ta.out + "/history_subject.csv");
      save_history_csv(res.history, "relation",
                       ta.out + "/history_relation.csv");
      save_history_csv(res.history, "object", ta.out + "/history_object.csv");
      {
        std::ofstream out(ta.out + "/train.json");
        out << train_config_to_json(cfg).dump(2) << '\n';
      }
      detail::write_manifest(ta.out + "/manifest.json", "train",
                             train_config_to_json(cfg));
      if (!res.history.empty()) {
        const EpochRecord& last = res.history.back();
        std::cout << "trained " << cfg.epochs << " epochs; final losses"
                  << " subject=" << last.subject.total
                  << " relation=" << last.relation.total
                  << " object=" << last.object.total << "; wrote " << ta.out
                  << "\n";
      } else {
        std::cout << "trained 0 epochs; wrote " << ta.out << "\n";
      }
      return 0;
    }

    if (cmd_eval->parsed()) {
      detail::require_exists(ea.model, "checkpoint");
      detail::require_exists(ea.data, "dataset directory");
      if (ea.format != "csv" && ea.format != "json")
        throw UserError("unknown format '" + ea.format + "'");
      ModelParams params = load_checkpoint(ea.model);
      DataDir dd = load_data_dir(ea.data);
      if (params.k_ent() != dd.vocab_ent.size() ||
          params.k_rel() != dd.vocab_rel.size())
        throw UserError("checkpoint class counts do not match the dataset");
      const Dataset* split = ea.split == "train" ? &dd.train
                             : ea.split == "val" ? &dd.val
                             : ea.split == "test" ? &dd.test
                                                  : nullptr;
      if (!split) throw UserError("unknown split '" + ea.split + "'");
      std::vector<int> ts(dd.train.size()), tr(dd.train.size()),
          to(dd.train.size());
      for (int i = 0; i < dd.train.size(); ++i) {
        ts[i] = dd.train.examples[i].y_s;
        tr[i] = dd.train.examples[i].y_r;
        to[i] = dd.train.examples[i].y_o;
      }
      EvalOptions opt;
      opt.topk = ea.topk;
      EvalResult res = evaluate(params, *split, dd.bands_ent, dd.bands_rel,
                                count_triplets(ts, tr, to), opt);
      std::filesystem::create_directories(ea.out);
      save_predictions_jsonl(res.records, ea.out + "/predictions.jsonl");
      std::vector<SoftApRow> soft_rows;
      bool want_soft = !ea.simmat_ent.empty() || !ea.simmat_rel.empty();
      if (want_soft) {
        std::vector<int> cutoffs = detail::parse_int_list(ea.cutoffs, "cutoff");
        if (!ea.simmat_ent.empty()) {
          SimilarityMatrix sim = detail::load_simmat(ea.simmat_ent, dd.vocab_ent);
          detail::append_soft_ap_rows(soft_rows, res.records, sim, 's', ea.ap_t,
                                      cutoffs);
          detail::append_soft_ap_rows(soft_rows, res.records, sim, 'o', ea.ap_t,
                                      cutoffs);
        }
        if (!ea.simmat_rel.empty()) {
          SimilarityMatrix sim = detail::load_simmat(ea.simmat_rel, dd.vocab_rel);
          detail::append_soft_ap_rows(soft_rows, res.records, sim, 'r', ea.ap_t,
                                      cutoffs);
        }
      }
      detail::write_reports(ea.out, ea.format, res.subject, res.object,
                            res.sbj_obj, res.relation, res.triplet, res.pair_so,
                            res.pair_sr, res.pair_or,
                            want_soft ? &soft_rows : nullptr);
      detail::write_manifest(
          ea.out + "/manifest.json", "eval",
          nlohmann::json{{"model", ea.model},
                         {"data", ea.data},
                         {"split", ea.split},
                         {"topk", ea.topk},
                         {"format", ea.format},
                         {"simmat_ent", ea.simmat_ent},
                         {"simmat_rel", ea.simmat_rel},
                         {"ap_T", ea.ap_t},
                         {"cutoffs", ea.cutoffs}});
      std::cout << "evaluated " << split->size() << " examples from '"
                << ea.split << "'; wrote " << ea.out << "\n";
      return 0;
    }

    if (cmd_report->parsed()) {
      detail::require_exists(ra.preds, "predictions file");
      detail::require_exists(ra.data, "dataset directory");
      if (ra.format != "csv" && ra.format != "json")
        throw UserError("unknown format '" + ra.format + "'");
      std::vector<PredictionRecord> recs = load_predictions_jsonl(ra.preds);
      if (recs.empty()) throw UserError("predictions file is empty: " + ra.preds);
      DataDir dd = load_data_dir(ra.data);
      const int k_ent = dd.vocab_ent.size();
      const int k_rel = dd.vocab_rel.size();
      std::vector<int> p_s, p_r, p_o, g_s, g_r, g_o;
      for (const auto& r : recs) {
        p_s.push_back(r.rank_s[0]);
        p_r.push_back(r.rank_r[0]);
        p_o.push_back(r.rank_o[0]);
        g_s.push_back(r.gold_s);
        g_r.push_back(r.gold_r);
        g_o.push_back(r.gold_o);
      }
      BandReport subject =
          band_report(per_class_accuracy(p_s, g_s, k_ent), dd.bands_ent);
      BandReport object =
          band_report(per_class_accuracy(p_o, g_o, k_ent), dd.bands_ent);
      std::vector<int> pooled_p = p_s, pooled_g = g_s;
      pooled_p.insert(pooled_p.end(), p_o.begin(), p_o.end());
      pooled_g.insert(pooled_g.end(), g_o.begin(), g_o.end());
      BandReport sbj_obj = band_report(
          per_class_accuracy(pooled_p, pooled_g, k_ent), dd.bands_ent);
      BandReport relation =
          band_report(per_class_accuracy(p_r, g_r, k_rel), dd.bands_rel);
      std::vector<int> ts(dd.train.size()), tr(dd.train.size()),
          to(dd.train.size());
      for (int i = 0; i < dd.train.size(); ++i) {
        ts[i] = dd.train.examples[i].y_s;
        tr[i] = dd.train.examples[i].y_r;
        to[i] = dd.train.examples[i].y_o;
      }
      TripletEval triplet = triplet_accuracy(p_s, p_r, p_o, g_s, g_r, g_o,
                                             count_triplets(ts, tr, to));
      double pair_so =
          grouped_pair_accuracy(p_s, p_r, p_o, g_s, g_r, g_o, PairGroup::so);
      double pair_sr =
          grouped_pair_accuracy(p_s, p_r, p_o, g_s, g_r, g_o, PairGroup::sr);
      double pair_or =
          grouped_pair_accuracy(p_s, p_r, p_o, g_s, g_r, g_o, PairGroup::or_);
      std::filesystem::create_directories(ra.out);
      std::vector<SoftApRow> soft_rows;
      bool want_soft = !ra.simmat_ent.empty() || !ra.simmat_rel.empty();
      if (want_soft) {
        std::vector<int> cutoffs = detail::parse_int_list(ra.cutoffs, "cutoff");
        if (!ra.simmat_ent.empty()) {
          SimilarityMatrix sim = detail::load_simmat(ra.simmat_ent, dd.vocab_ent);
          detail::append_soft_ap_rows(soft_rows, recs, sim, 's', ra.ap_t,
                                      cutoffs);
          detail::append_soft_ap_rows(soft_rows, recs, sim, 'o', ra.ap_t,
                                      cutoffs);
        }
        if (!ra.simmat_rel.empty()) {
          SimilarityMatrix sim = detail::load_simmat(ra.simmat_rel, dd.vocab_rel);
          detail::append_soft_ap_rows(soft_rows, recs, sim, 'r', ra.ap_t,
                                      cutoffs);
        }
      }
      detail::write_reports(ra.out, ra.format, subject, object, sbj_obj,
                            relation, triplet, pair_so, pair_sr, pair_or,
                            want_soft ? &soft_rows : nullptr);
      detail::write_manifest(ra.out + "/manifest.json", "report",
                             nlohmann::json{{"preds", ra.preds},
                                            {"data", ra.data},
                                            {"format", ra.format},
                                            {"simmat_ent", ra.simmat_ent},
                                            {"simmat_rel", ra.simmat_rel},
                                            {"ap_T", ra.ap_t},
                                            {"cutoffs", ra.cutoffs}});
      std::cout << "report over " << recs.size() << " predictions; wrote "
                << ra.out << "\n";
      return 0;
    }

    if (cmd_simmat->parsed()) {
      detail::require_exists(sa.vocab, "vocabulary");
      ClassVocabulary vocab = load_vocab(sa.vocab, Branch::entity);
      SimilarityMatrix m;
      if (sa.metric == "cosine") {
        if (sa.embeddings.empty())
          throw UserError("metric 'cosine' requires --embeddings");
        detail::require_exists(sa.embeddings, "embeddings");
        m = build_similarity_matrix(vocab, load_embeddings(sa.embeddings));
      } else if (!sa.precomputed.empty()) {
        m = detail::load_simmat(sa.precomputed, vocab);
      } else {
        TaxMetric metric = tax_metric_from_string(sa.metric);
        if (sa.taxonomy.empty())
          throw UserError("metric '" + sa.metric + "' requires --taxonomy");
        detail::require_exists(sa.taxonomy, "taxonomy");
        Taxonomy tax = load_taxonomy(sa.taxonomy);
        ICTable ic;
        const ICTable* icp = nullptr;
        if (metric == TaxMetric::res || metric == TaxMetric::jcn ||
            metric == TaxMetric::lin) {
          if (sa.ic.empty())
            throw UserError("metric '" + sa.metric + "' requires --ic");
          detail::require_exists(sa.ic, "IC table");
          ic = load_ic(sa.ic, tax);
          icp = &ic;
        }
        m = build_similarity_matrix(vocab, tax, metric, icp, sa.jcn_cap);
      }
      validate_similarity(m);
      if (sa.format == "csv")
        save_similarity_csv(m, sa.out);
      else if (sa.format == "bin")
        save_similarity_bin(m, sa.out);
      else
        throw UserError("unknown format '" + sa.format + "'");
      detail::write_manifest(sa.out + ".manifest.json", "simmat",
                             nlohmann::json{{"vocab", sa.vocab},
                                            {"metric", sa.metric},
                                            {"taxonomy", sa.taxonomy},
                                            {"ic", sa.ic},
                                            {"embeddings", sa.embeddings},
                                            {"precomputed", sa.precomputed},
                                            {"jcn_cap", sa.jcn_cap},
                                            {"format", sa.format}});
      std::cout << "wrote " << m.size() << "x" << m.size() << " matrix ("
                << m.metric_name << ") to " << sa.out << "\n";
      return 0;
    }

    if (cmd_gc->parsed()) {
      struct Scenario {
        const char* name;
        GradCheckConfig cfg;
      };
      std::vector<Scenario> scenarios;
      auto base = GradCheckConfig{};
      base.trials = ga.trials;
      base.seed = ga.seed;
      {
        Scenario s{"softmax", base};
        scenarios.push_back(s);
        s = {"weighted", base};
        s.cfg.kind = LossKind::weighted;
        scenarios.push_back(s);
        s = {"focal", base};
        s.cfg.kind = LossKind::focal;
        s.cfg.gamma_focal = 2.0;
        scenarios.push_back(s);
        s = {"vilhub", base};
        s.cfg.gamma_vilhub = 5.0;
        scenarios.push_back(s);
        s = {"soft_targets", base};
        s.cfg.soft_targets = true;
        scenarios.push_back(s);
        s = {"hidden", base};
        s.cfg.hidden = 6;
        scenarios.push_back(s);
        s = {"normalized", base};
        s.cfg.normalize = true;
        s.cfg.gamma_vilhub = 1.0;
        scenarios.push_back(s);
      }
      double worst = 0.0;
      std::string worst_name;
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& s : scenarios) {
        GradCheckReport rep = gradcheck_params(s.cfg);
        std::cout << "gradcheck " << s.name << ": max rel err "
                  << rep.max_rel_err << " (worst " << rep.worst_param << ")\n";
        rows.push_back({{"scenario", s.name},
                        {"max_rel_err", rep.max_rel_err},
                        {"worst_param", rep.worst_param}});
        if (rep.max_rel_err > worst) {
          worst = rep.max_rel_err;
          worst_name = s.name;
        }
      }
      if (!ga.out.empty()) {
        std::filesystem::create_directories(ga.out);
        std::ofstream out(ga.out + "/gradcheck.json");
        out << nlohmann::json{{"tolerance", ga.tol},
                              {"max_rel_err", worst},
                              {"scenarios", rows}}
                   .dump(2)
            << '\n';
        detail::write_manifest(ga.out + "/manifest.json", "gradcheck",
                               nlohmann::json{{"trials", ga.trials},
                                              {"seed", ga.seed},
                                              {"tol", ga.tol}});
      }
      if (worst >= ga.tol) {
        std::cout << "FAIL: scenario '" << worst_name << "' max rel err "
                  << worst << " >= " << ga.tol << "\n";
        return 1;
      }
      std::cout << "OK: all gradients within " << ga.tol << "\n";
      return 0;
    }

    if (cmd_sweep->parsed()) {
      detail::require_exists(swa.data, "dataset directory");
      if (swa.format != "csv" && swa.format != "json")
        throw UserError("unknown format '" + swa.format + "'");
      std::vector<double> gammas = detail::parse_double_list(swa.gammas,
                                                             "gamma");
      DataDir dd = load_data_dir(swa.data);
      std::vector<int> ts(dd.train.size()), tr(dd.train.size()),
          to(dd.train.size());
      for (int i = 0; i < dd.train.size(); ++i) {
        ts[i] = dd.train.examples[i].y_s;
        tr[i] = dd.train.examples[i].y_r;
        to[i] = dd.train.examples[i].y_o;
      }
      TripletCounts train_counts = count_triplets(ts, tr, to);
      std::filesystem::create_directories(swa.out);
      struct Row {
        double gamma;
        std::string split, branch;
        BandReport report;
      };
      std::vector<Row> rows;
      for (double gamma : gammas) {
        TrainArgs run_args = sta;
        run_args.gamma = gamma;
        TrainConfig cfg = resolve_train_config(run_args);
        cfg.eval_every = 0;
        TrainResult res = detail::run_training(dd, cfg);
        for (const char* split_name : {"val", "test"}) {
          const Dataset& split =
              std::string(split_name) == "val" ? dd.val : dd.test;
          EvalResult ev = evaluate(res.params, split, dd.bands_ent,
                                   dd.bands_rel, train_counts);
          rows.push_back({gamma, split_name, "subject", ev.subject});
          rows.push_back({gamma, split_name, "object", ev.object});
          rows.push_back({gamma, split_name, "sbj_obj", ev.sbj_obj});
          rows.push_back({gamma, split_name, "relation", ev.relation});
        }
        std::cout << "sweep gamma=" << gamma << " done\n";
      }
      if (swa.format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows)
          arr.push_back({{"gamma", r.gamma},
                         {"split", r.split},
                         {"branch", r.branch},
                         {"report", detail::band_json(r.report)}});
        std::ofstream out(swa.out + "/sweep.json");
        out << arr.dump(2) << '\n';
      } else {
        std::ofstream out(swa.out + "/sweep.csv");
        if (!out) throw std::runtime_error("cannot write sweep.csv");
        out << "gamma,split,branch,many,medium,few,all\n";
        char buf[40];
        for (const auto& r : rows) {
          std::snprintf(buf, sizeof buf, "%.10g", r.gamma);
          out << buf << ',' << r.split << ',' << r.branch;
          for (const auto& cell :
               {r.report.many, r.report.medium, r.report.few, r.report.all}) {
            out << ',';
            if (cell) {
              std::snprintf(buf, sizeof buf, "%.4f", *cell);
              out << buf;
            } else {
              out << "na";
            }
          }
          out << '\n';
        }
      }
      detail::write_manifest(swa.out + "/manifest.json", "sweep",
                             nlohmann::json{{"data", swa.data},
                                            {"gammas", swa.gammas},
                                            {"loss", sta.loss},
                                            {"epochs", sta.epochs},
                                            {"seed", sta.seed},
                                            {"format", swa.format}});
      std::cout << "sweep over " << gammas.size() << " values; wrote "
                << swa.out << "\n";
      return 0;
    }
  } catch (const UserError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 2;
  }
  return 2;  // unreachable: a subcommand is required
}

}  // namespace ltrel::cli
