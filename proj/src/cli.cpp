// SPDX-License-Identifier: Apache-2.0
#include "hoi/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <thread>

#include "hoi/attention.hpp"
#include "hoi/config.hpp"
#include "hoi/evaluator.hpp"
#include "hoi/fixtures.hpp"
#include "hoi/registry.hpp"
#include "hoi/signature.hpp"
#include "hoi/tensor_io.hpp"

namespace hoi {

namespace fs = std::filesystem;

namespace {

// Raw flag values; a flag only overrides the config when it was given.
struct RunFlags {
  std::string config_path;
  double tau = 0, gamma = 0, lambda_neg = 0;
  std::vector<std::string> heads;
  bool no_bias = false, no_mhom = false;
  double threshold = 0, det_threshold = 0;
  std::size_t min_keep = 0, max_keep = 0, J = 0, M = 0;
  std::vector<int> held_out;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;

  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts["config"] = app->add_option("--config", config_path, "JSON run config");
    opts["tau"] = app->add_option("--tau", tau, "MhOM temperature");
    opts["gamma"] = app->add_option("--gamma", gamma, "detector confidence exponent");
    opts["lambda-neg"] = app->add_option("--lambda-neg", lambda_neg, "negative bias weight");
    opts["heads"] = app->add_option("--heads", heads, "enabled heads, e.g. tf,tc,vi,vc")->delimiter(',');
    opts["no-bias"] = app->add_flag("--no-bias", no_bias, "disable the negative bias");
    opts["no-mhom"] = app->add_flag("--no-mhom", no_mhom, "plain mean of the heads");
    opts["threshold"] = app->add_option("--threshold", threshold, "pseudolabel admission threshold");
    opts["det-threshold"] = app->add_option("--det-threshold", det_threshold, "detection confidence threshold");
    opts["min-keep"] = app->add_option("--min-keep", min_keep, "minimum instances per subset");
    opts["max-keep"] = app->add_option("--max-keep", max_keep, "maximum instances per subset");
    opts["J"] = app->add_option("--J", J, "registry capacity per category");
    opts["M"] = app->add_option("--M", M, "descriptions per category");
    opts["held-out"] = app->add_option("--held-out", held_out, "unseen category ids, e.g. 3,7")->delimiter(',');
    opts["seed"] = app->add_option("--seed", seed, "random seed");
    opts["jobs"] = app->add_option("--jobs", jobs, "worker threads");
  }

  bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  RunConfig resolve() const {
    RunConfig c;
    if (given("config")) c = load_config(config_path, c);
    if (given("tau")) c.scoring.tau = tau;
    if (given("gamma")) c.scoring.gamma = gamma;
    if (given("lambda-neg")) c.scoring.lambda_neg = lambda_neg;
    if (given("heads")) {
      c.scoring.heads = {false, false, false, false};
      for (const auto& name : heads) {
        auto h = head_from_name(name);
        if (!h) throw Error(ErrorCode::Usage, "unknown head '" + name + "'");
        c.scoring.heads[static_cast<std::size_t>(*h)] = true;
      }
    }
    if (no_bias) c.scoring.bias = false;
    if (no_mhom) c.scoring.mhom = false;
    if (given("threshold")) c.pseudo_threshold = threshold;
    if (given("det-threshold")) c.detection.threshold = det_threshold;
    if (given("min-keep")) c.detection.min_keep = min_keep;
    if (given("max-keep")) c.detection.max_keep = max_keep;
    if (given("J")) c.registry_size = J;
    if (given("M")) c.signature_rows = M;
    if (given("held-out")) c.held_out = {held_out.begin(), held_out.end()};
    if (given("seed")) c.seed = seed;
    if (given("jobs")) c.jobs = jobs;
    validate(c);
    return c;
  }
};

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

std::string person_label_of(const std::string& vocab_path) {
  return vocab_path.empty() ? std::string("person") : load_vocabulary(vocab_path).person_label();
}

// --- signatures build -------------------------------------------------------

struct SignaturesBuild {
  std::string vocab, templates, embeddings, out;

  int run(const RunConfig& cfg, std::ostream& out_s) const {
    const Vocabulary v = load_vocabulary(vocab);
    const Json cfg_json = config_to_json(cfg);
    fs::create_directories(out);
    if (!templates.empty()) {
      const Json tj = read_json(templates);
      const Json& list = tj.is_array() ? tj : require<Json>(tj, "templates");
      std::vector<PromptTemplate> tpl;
      for (const auto& t : list) tpl.emplace_back(t.get<std::string>());
      Json cats = Json::array();
      for (const auto& c : v.categories()) {
        cats.push_back(Json{{"id", c.id},
                            {"verb", c.verb},
                            {"object", c.object},
                            {"prompts", fill_templates(tpl, c, cfg.signature_rows)}});
      }
      write_json(fs::path(out) / "prompts.json",
                 Json{{"format", "hoi-prompts"}, {"config", cfg_json}, {"categories", std::move(cats)}});
      out_s << "wrote " << (fs::path(out) / "prompts.json").string() << "\n";
    }
    if (!embeddings.empty()) {
      const SignatureSet set = load_signature_set(embeddings, &v);
      if (set.rows_per_category() != cfg.signature_rows) {
        throw Error(ErrorCode::BadCount, "embeddings carry " + std::to_string(set.rows_per_category()) +
                                             " rows per category, config M is " +
                                             std::to_string(cfg.signature_rows));
      }
      save_signature_set(set, out, cfg_json);
      out_s << "wrote " << set.size() << " signatures to " << out << "\n";
    }
    if (templates.empty() && embeddings.empty()) {
      throw Error(ErrorCode::Usage, "signatures build needs --templates and/or --embeddings");
    }
    return kExitOk;
  }
};

// --- registry build / pseudo -------------------------------------------------

struct RegistryBuild {
  std::string vocab, bundles, annotations, out;

  int run(const RunConfig& cfg, std::ostream& out_s) const {
    const Vocabulary v = load_vocabulary(vocab);
    const auto gt = load_ground_truth(annotations);
    Registry reg = build_labeled(gt, load_bundles(bundles), v.size(), cfg.registry_size, cfg.match_iou);
    if (!cfg.held_out.empty()) reg = filter_zero_shot(reg, cfg.held_out);
    save_registry(reg, out, config_to_json(cfg));
    out_s << "registry: " << reg.total_entries() << " labeled entries\n";
    return kExitOk;
  }
};

struct RegistryPseudo {
  std::string signatures, vocab, bundles, scores, out;

  int run(const RunConfig& cfg, std::ostream& out_s) const {
    const SignatureSet sigs = load_signature_set(signatures);
    PseudoParams p;
    p.threshold = cfg.pseudo_threshold;
    p.capacity = cfg.registry_size;
    p.filter = cfg.detection;
    p.person_label = person_label_of(vocab);
    const auto bs = load_bundles(bundles);
    Registry reg = scores.empty()
                       ? build_pseudo(bs, TextualScoreSource(sigs, cfg.scoring.tau), p)
                       : build_pseudo(bs, ExternalScoreSource(sigs.size(), scores), p);
    if (!cfg.held_out.empty()) reg = filter_zero_shot(reg, cfg.held_out);
    save_registry(reg, out, config_to_json(cfg));
    out_s << "registry: " << reg.total_entries() << " pseudolabeled entries\n";
    return kExitOk;
  }
};

// --- predict ----------------------------------------------------------------

std::vector<PredictionTriplet> predict_bundle(const FeatureBundle& b, const Scorer& scorer,
                                              const RunConfig& cfg, const std::string& person) {
  std::vector<PredictionTriplet> out;
  for (const auto& pair : propose_pairs(b, person, cfg.detection)) {
    for (const auto& r : scorer.rank(pair)) {
      out.push_back({b.image_id, pair.human.box, pair.object.box, r.category, r.score});
    }
  }
  return out;
}

struct Predict {
  std::string signatures, vocab, registry, bundles, out;

  int run(const RunConfig& cfg, std::ostream& out_s) const {
    const SignatureSet sigs = load_signature_set(signatures);
    std::optional<Registry> reg;
    if (!registry.empty()) {
      reg = load_registry(registry);
      if (!cfg.held_out.empty()) reg = filter_zero_shot(*reg, cfg.held_out);
    }
    const Scorer scorer(sigs, reg ? &*reg : nullptr, cfg.scoring);
    const std::string person = person_label_of(vocab);
    const auto bs = load_bundles(bundles);

    // Per-image work fans out; results are joined in bundle order so the
    // output does not depend on the job count.
    std::vector<std::vector<PredictionTriplet>> per_image(bs.size());
    std::vector<std::exception_ptr> failures(bs.size());
    auto work = [&](std::size_t first) {
      for (std::size_t i = first; i < bs.size(); i += cfg.jobs) {
        try {
          per_image[i] = predict_bundle(bs[i], scorer, cfg, person);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(cfg.jobs, bs.size()); ++t) pool.emplace_back(work, t);
    work(0);
    for (auto& th : pool) th.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    std::vector<PredictionTriplet> all;
    for (auto& v : per_image) all.insert(all.end(), v.begin(), v.end());
    const fs::path out_path(out);
    write_text_file(out_path, predictions_to_jsonl(all));
    fs::path manifest = out_path;
    manifest.replace_extension(".manifest.json");
    write_json(manifest, Json{{"format", "hoi-predictions"},
                              {"predictions", out_path.filename().string()},
                              {"count", all.size()},
                              {"images", bs.size()},
                              {"registry_entries", reg ? reg->total_entries() : 0},
                              {"config", config_to_json(cfg)}});
    out_s << "wrote " << all.size() << " predictions for " << bs.size() << " images\n";
    return kExitOk;
  }
};

// --- eval -------------------------------------------------------------------

struct Eval {
  std::string vocab, gt, predictions, out;

  int run(const RunConfig& cfg, std::ostream& out_s) const {
    const Vocabulary v = load_vocabulary(vocab);
    const auto ap = evaluate_categories(load_predictions(predictions), load_ground_truth(gt), v.size(),
                                        cfg.match_iou);
    std::vector<bool> rare(v.size());
    for (std::size_t c = 0; c < v.size(); ++c) rare[c] = v.categories()[c].rare;
    const Metrics m = aggregate(ap, rare);

    Json per_cat = Json::array();
    for (std::size_t c = 0; c < ap.size(); ++c) {
      per_cat.push_back(Json{{"id", c}, {"rare", static_cast<bool>(rare[c])},
                             {"ap", ap[c] ? Json(100.0 * *ap[c]) : Json(nullptr)}});
    }
    Json doc{{"format", "hoi-metrics"},
             {"units", "percent"},
             {"full_mAP", 100.0 * m.full},
             {"rare_mAP", 100.0 * m.rare},
             {"nonrare_mAP", 100.0 * m.nonrare},
             {"afull_mAP", 100.0 * m.afull},
             {"rare_categories", m.rare_count},
             {"nonrare_categories", m.nonrare_count}};

    out_s << "metric        mAP(%)\n";
    out_s << "Full          " << format_percent(m.full) << "\n";
    out_s << "Rare          " << format_percent(m.rare) << "\n";
    out_s << "Non-rare      " << format_percent(m.nonrare) << "\n";
    out_s << "AFull         " << format_percent(m.afull) << "\n";
    if (!cfg.held_out.empty()) {
      const ZeroShotMetrics z = split_seen_unseen(ap, cfg.held_out);
      doc["zero_shot"] = Json{{"seen_mAP", 100.0 * z.seen},
                              {"unseen_mAP", 100.0 * z.unseen},
                              {"full_mAP", 100.0 * z.full},
                              {"afull_mAP", 100.0 * z.afull}};
      out_s << "Seen          " << format_percent(z.seen) << "\n";
      out_s << "Unseen        " << format_percent(z.unseen) << "\n";
      out_s << "AFull (zs)    " << format_percent(z.afull) << "\n";
    }
    doc["categories"] = std::move(per_cat);
    doc["config"] = config_to_json(cfg);
    Json summary = doc;
    summary.erase("categories");
    summary.erase("config");
    out_s << summary.dump() << "\n";
    if (!out.empty()) write_json(out, doc);
    return kExitOk;
  }
};

// --- fixtures synth ---------------------------------------------------------

struct FixturesSynth {
  FixtureSpec spec;
  std::string out;

  int run(const RunConfig& cfg, std::ostream& out_s) const {
    FixtureSpec s = spec;
    s.seed = cfg.seed;
    const FixtureWorld w = synth_fixtures(s);
    write_fixtures(w, out);
    out_s << "fixtures: " << w.test_bundles.size() << " test images, " << w.train_bundles.size()
          << " train images in " << out << "\n";
    return kExitOk;
  }
};

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free HOI scoring", "hoi"};
  app.require_subcommand(1);

  std::map<CLI::App*, RunFlags> flags;
  auto sub = [&](CLI::App* parent, const char* name, const char* help) {
    CLI::App* s = parent->add_subcommand(name, help);
    flags[s].attach(s);
    return s;
  };

  auto* sigs_cmd = app.add_subcommand("signatures", "interaction signatures")->require_subcommand(1);
  auto* reg_cmd = app.add_subcommand("registry", "visual exemplar registry")->require_subcommand(1);
  auto* fix_cmd = app.add_subcommand("fixtures", "synthetic datasets")->require_subcommand(1);

  SignaturesBuild sb;
  auto* sb_cmd = sub(sigs_cmd, "build", "expand templates and/or canonicalize embedded descriptions");
  sb_cmd->add_option("--vocab", sb.vocab, "vocabulary.json")->required();
  sb_cmd->add_option("--templates", sb.templates, "JSON list of prompt templates");
  sb_cmd->add_option("--embeddings", sb.embeddings, "signature manifest with embedded descriptions");
  sb_cmd->add_option("--out", sb.out, "output directory")->required();

  RegistryBuild rb;
  auto* rb_cmd = sub(reg_cmd, "build", "registry from annotated images");
  rb_cmd->add_option("--vocab", rb.vocab, "vocabulary.json")->required();
  rb_cmd->add_option("--bundles", rb.bundles, "feature bundle directory")->required();
  rb_cmd->add_option("--annotations", rb.annotations, "annotation JSON")->required();
  rb_cmd->add_option("--out", rb.out, "output directory")->required();

  RegistryPseudo rp;
  auto* rp_cmd = sub(reg_cmd, "pseudo", "registry from pseudolabeled images");
  rp_cmd->add_option("--signatures", rp.signatures, "signatures.json")->required();
  rp_cmd->add_option("--vocab", rp.vocab, "vocabulary.json (person label)");
  rp_cmd->add_option("--bundles", rp.bundles, "feature bundle directory")->required();
  rp_cmd->add_option("--scores", rp.scores, "external pair scores (JSONL)");
  rp_cmd->add_option("--out", rp.out, "output directory")->required();

  Predict pr;
  auto* pr_cmd = sub(&app, "predict", "score every pair of every image");
  pr_cmd->add_option("--signatures", pr.signatures, "signatures.json")->required();
  pr_cmd->add_option("--vocab", pr.vocab, "vocabulary.json (person label)");
  pr_cmd->add_option("--registry", pr.registry, "registry.json");
  pr_cmd->add_option("--bundles", pr.bundles, "feature bundle directory")->required();
  pr_cmd->add_option("--out", pr.out, "predictions.jsonl")->required();

  Eval ev;
  auto* ev_cmd = sub(&app, "eval", "mAP over the rare/non-rare split");
  ev_cmd->add_option("--vocab", ev.vocab, "vocabulary.json")->required();
  ev_cmd->add_option("--gt", ev.gt, "ground-truth JSON")->required();
  ev_cmd->add_option("--predictions", ev.predictions, "predictions.jsonl")->required();
  ev_cmd->add_option("--out", ev.out, "metrics.json");

  FixturesSynth fs_;
  auto* fs_cmd = sub(fix_cmd, "synth", "write a synthetic dataset");
  fs_cmd->add_option("--out", fs_.out, "output directory")->required();
  fs_cmd->add_option("--categories", fs_.spec.categories, "number of categories");
  fs_cmd->add_option("--dim", fs_.spec.dim, "embedding width");
  fs_cmd->add_option("--rows", fs_.spec.rows, "descriptions per category");
  fs_cmd->add_option("--images", fs_.spec.images, "test images");
  fs_cmd->add_option("--train-per-category", fs_.spec.train_per_category, "annotated train images per category");
  fs_cmd->add_option("--noise", fs_.spec.noise, "per-coordinate noise std");
  fs_cmd->add_flag("--antipodal", fs_.spec.antipodal, "two categories with opposite directions");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto dispatch = [&](CLI::App* cmd, auto& handler) -> std::optional<int> {
    if (!cmd->parsed()) return std::nullopt;
    return handler.run(flags.at(cmd).resolve(), out);
  };
  try {
    for (auto r : {dispatch(sb_cmd, sb), dispatch(rb_cmd, rb), dispatch(rp_cmd, rp),
                   dispatch(pr_cmd, pr), dispatch(ev_cmd, ev), dispatch(fs_cmd, fs_)}) {
      if (r) return *r;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Usage ? kExitUsage : kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  err << app.help();
  return kExitUsage;
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace hoi
