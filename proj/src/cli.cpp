#include "skillrec/cli.hpp"

#include <csignal>
#include <map>
#include <optional>
#include <ostream>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "skillrec/bundle.hpp"
#include "skillrec/config.hpp"
#include "skillrec/evaltool.hpp"
#include "skillrec/serve.hpp"

namespace skillrec::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return kUsage;
    case ErrorCode::MissingFile:
    case ErrorCode::SchemaViolation:
    case ErrorCode::DanglingReference:
    case ErrorCode::OrderViolation:
    case ErrorCode::CorruptRecord:
    case ErrorCode::EmptyCorpus: return kValidation;
    case ErrorCode::InsufficientData: return kInsufficientData;
    case ErrorCode::UnknownStudent: return kUnknownStudent;
    case ErrorCode::EmptyAfterScope: return kEmptyAfterScope;
    default: return kFailure;
  }
}

std::string recommend_json(const Corpus& corpus, const Bundle& bundle, const Embedder& embedder,
                           const std::string& student_id, int week,
                           const RecommendOptions& options) {
  const int year = bundle.trained_upto.offering_year;
  if (!corpus.has_student(student_id, year)) {
    throw Error(ErrorCode::UnknownStudent,
                "no student '" + student_id + "' in offering " + std::to_string(year));
  }
  const int lab = corpus.schedule(year).lab_of_week(week);
  if (lab == 0) {
    throw Error(ErrorCode::EmptyAfterScope, "no lab is held by week " + std::to_string(week));
  }
  if (lab != bundle.trained_upto.lab_index) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("week {} is lab {}, but the bundle was trained up to lab {}", week, lab,
                            bundle.trained_upto.lab_index));
  }
  const auto list =
      recommend_for_student(corpus, bundle.models, embedder, student_id, year, week, options);
  return recommendations_to_json(list).dump();
}

namespace {

struct ConfigKey {
  const char* name;
  const char* help;
};

constexpr ConfigKey kConfigKeys[] = {
    {"corpus", "corpus root (schedule.json, problems/, submissions.jsonl)"},
    {"provider", "tfidf, precomputed:<file> or remote:<url>"},
    {"dim", "embedding dimension"},
    {"timeout", "remote embedding timeout in seconds"},
    {"hidden", "hidden units"},
    {"epochs", "training epochs"},
    {"lr", "learning rate"},
    {"lambda", "L2 penalty"},
    {"seed", "random seed (default 42)"},
    {"strategy", "avg-all, avg-last-lab, centroid-all or centroid-last-lab"},
    {"metric", "skills, solution-time or correctness"},
    {"k", "number of recommendations"},
    {"suitability", "strict or loose"},
    {"week-filter", "only recommend homework released by the current week (true/false)"},
    {"instructor-labels", "rank candidates by instructor labels (true/false)"},
    {"correct-only", "build contexts from correct submissions only (true/false)"},
    {"out", "output directory"},
};

struct Settings {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_settings(CLI::App* sub, Settings& s) {
  sub->add_option("--config", s.config_file, "key = value settings file; flags override it");
  for (const auto& key : kConfigKeys) {
    sub->add_option(std::string("--") + key.name, s.values[key.name], key.help);
  }
}

Config resolve(CLI::App* sub, const Settings& s) {
  Config cfg;
  if (!s.config_file.empty()) cfg.load_file(s.config_file);
  for (const auto& key : kConfigKeys) {
    if (sub->get_option(std::string("--") + key.name)->count() > 0) {
      cfg.set(key.name, s.values.at(key.name));
    }
  }
  return cfg;
}

int latest_offering(const Corpus& corpus) {
  if (corpus.schedules().empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no offerings");
  return corpus.schedules().rbegin()->first;
}

int cmd_ingest(const Config& cfg, std::ostream& out) {
  const Corpus corpus = load_corpus(cfg.corpus);
  out << fmt::format("{} submissions, {} students, {} problems\n", corpus.submission_count(),
                     corpus.distinct_student_count(), corpus.problems().size());
  std::size_t homework = 0;
  for (const auto& [_, p] : corpus.problems()) homework += p.role == ProblemRole::Homework ? 1 : 0;
  out << fmt::format("{} lab problems, {} homework problems\n", corpus.problems().size() - homework,
                     homework);
  for (const auto& [year, schedule] : corpus.schedules()) {
    std::map<int, std::size_t> per_lab;
    std::size_t students = 0, total = 0;
    for (const auto& seq : corpus.sequences()) {
      if (seq.offering_year != year) continue;
      ++students;
      total += seq.size();
      for (const auto& s : seq.submissions) ++per_lab[s.lab_index];
    }
    out << fmt::format("offering {}: {} labs, {} students, {} submissions\n", year,
                       schedule.lab_count(), students, total);
    for (int lab = 1; lab <= schedule.lab_count(); ++lab) {
      out << fmt::format("  lab {} (week {}): {} submissions\n", lab, schedule.week_of_lab(lab),
                         per_lab[lab]);
    }
  }
  return kOk;
}

struct TrainArgs {
  std::optional<int> year;
  std::optional<int> lab;
  std::string bundle;
  bool with_baselines = false;
};

int cmd_train(const Config& cfg, const TrainArgs& args, std::ostream& out) {
  const Corpus corpus = load_corpus(cfg.corpus);
  const int year = args.year.value_or(latest_offering(corpus));
  const CourseSchedule& schedule = corpus.schedule(year);
  const int lab = args.lab.value_or(schedule.lab_count());
  if (lab < 1 || lab > schedule.lab_count()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("offering {} has labs 1..{}", year, schedule.lab_count()));
  }
  const auto labeled = correct_submissions(corpus, year, lab);
  const auto attempts = lab_submissions(corpus, year, lab);
  std::vector<std::string> sources;
  for (const auto& s : attempts) sources.push_back(s.source);

  const auto provider = cfg.embedding_provider();
  const auto embedder = provider.fit(sources);
  const TrainedUpto upto{year, lab};
  auto training =
      train_model_set(labeled, attempts, *embedder, cfg.hyper, upto, args.with_baselines);

  Bundle bundle;
  bundle.models = std::move(training.models);
  bundle.provider = cfg.provider;
  bundle.dim = cfg.dim;
  bundle.timeout_s = cfg.timeout_s;
  if (const auto* tfidf = dynamic_cast<const TfIdfEmbedder*>(embedder.get())) {
    bundle.vocabulary = tfidf->vocabulary();
  }
  bundle.trained_upto = upto;
  bundle.seed = cfg.hyper.seed;
  bundle.config_digest = cfg.digest();

  const fs::path dir = args.bundle.empty()
                           ? cfg.out / fmt::format("bundle-{}-lab{}", year, lab)
                           : fs::path(args.bundle);
  save_bundle(bundle, dir);

  out << fmt::format("trained on {} correct submissions up to lab {} of {}\n", labeled.size(),
                     lab, year);
  for (std::size_t t = 0; t < kTopicCount; ++t) {
    out << fmt::format("  {:<12} training accuracy {:.4f}\n", topic_label(topic_from_index(t)),
                       training.training_accuracy[t]);
  }
  for (const auto& w : training.warnings) out << "warning: " << w << '\n';
  out << fmt::format("bundle {} ({})\n", dir.generic_string(), bundle_digest(dir));
  return kOk;
}

struct RecommendArgs {
  std::string bundle;
  std::string student;
  int week = 0;
};

int cmd_recommend(const Config& cfg, const RecommendArgs& args, std::ostream& out) {
  const Corpus corpus = load_corpus(cfg.corpus);
  const Bundle bundle = load_bundle(args.bundle);
  const auto embedder = bundle.embedder();
  out << recommend_json(corpus, bundle, *embedder, args.student, args.week,
                        cfg.recommend_options())
      << '\n';
  return kOk;
}

struct EvaluateArgs {
  std::optional<int> test_year;
  std::string experiment = "all";
};

int cmd_evaluate(const Config& cfg, const EvaluateArgs& args, std::ostream& out,
                 std::ostream& err) {
  const Corpus corpus = load_corpus(cfg.corpus);
  const int year = args.test_year.value_or(latest_offering(corpus));
  const auto provider = cfg.embedding_provider();

  EvaluationReport report;
  report.test_year = year;
  report.seed = cfg.hyper.seed;
  report.config_digest = cfg.digest();
  report.provider = cfg.provider;
  if (args.experiment != "2") {
    report.experiment1 = accuracy_experiment(corpus, provider, cfg.hyper, year, &report.provenance);
  }
  if (args.experiment != "1") {
    report.experiment2 = suitability_experiment(corpus, provider, cfg.hyper, year,
                                                cfg.evaluation_options(), &report.provenance);
  }
  emit_report(report, cfg.out);

  if (report.experiment1) {
    const auto& e = *report.experiment1;
    out << fmt::format("experiment 1: skill accuracy ({}), test offering {}\n", e.method, year);
    for (std::size_t t = 0; t < kTopicCount; ++t) {
      out << fmt::format("  {:<12} {:.4f} +- {:.4f}\n", topic_label(topic_from_index(t)),
                         e.mean[t], e.stdev[t]);
    }
    out << fmt::format("  {:<12} {:.4f} +- {:.4f}\n", "Mean", e.overall_mean, e.overall_stdev);
    for (const auto& w : e.warnings) out << "  warning: " << w << '\n';
  }
  if (report.experiment2) {
    const auto& e = *report.experiment2;
    out << fmt::format("experiment 2: suitable recommendations (%), k={}, {} suitability, {}\n",
                       e.k, suitability_name(e.mode), strategy_name(cfg.strategy));
    out << "  lab  students   skills  solution-time  correctness   random\n";
    const auto& skills = e.find(RankingMetric::Skills, cfg.strategy);
    const auto& time = e.find(RankingMetric::SolutionTime, cfg.strategy);
    const auto& correct = e.find(RankingMetric::Correctness, cfg.strategy);
    for (std::size_t i = 0; i < e.labs.size(); ++i) {
      out << fmt::format("  {:>3}  {:>8}  {:>7.2f}  {:>13.2f}  {:>11.2f}  {:>7.2f}\n", e.labs[i],
                         e.students[i], skills.percent[i], time.percent[i], correct.percent[i],
                         e.random[i]);
    }
    for (const auto& w : e.warnings) out << "  warning: " << w << '\n';
  }
  out << fmt::format("provenance: {} checks, {} violations\n", report.provenance.checks(),
                     report.provenance.violations().size());
  out << fmt::format("report written to {}\n", cfg.out.generic_string());
  if (!report.provenance.violations().empty()) {
    for (const auto& v : report.provenance.violations()) err << "leak: " << v << '\n';
    return kFailure;
  }
  return kOk;
}

struct ServeArgs {
  std::string bundle;
  std::string host = "127.0.0.1";
  int port = 8080;
};

int cmd_serve(const Config& cfg, const ServeArgs& args, std::ostream& out, std::ostream& err) {
  auto state = std::make_shared<ServeState>();
  state->corpus = std::make_shared<const Corpus>(load_corpus(cfg.corpus));
  auto bundle = std::make_shared<const Bundle>(load_bundle(args.bundle));
  state->embedder = bundle->embedder();
  state->bundle = std::move(bundle);
  state->defaults = cfg.recommend_options();
  auto server = make_server(state);

  // Interrupts are taken by a dedicated thread so the listener can stop cleanly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server->stop();
  });

  if (!server->bind_to_port(args.host, args.port)) {
    err << fmt::format("error: cannot listen on {}:{}\n", args.host, args.port);
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return kFailure;
  }
  out << fmt::format("serving on http://{}:{}\n", args.host, args.port) << std::flush;
  server->listen_after_bind();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  out << "stopped\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skill-aware homework recommendation for programming courses", "skillrec"};
  app.require_subcommand(1);

  Settings settings;
  auto* ingest = app.add_subcommand("ingest", "validate a corpus and print its counts");
  add_settings(ingest, settings);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train the skill models up to a lab");
  add_settings(train, settings);
  train->add_option("--year", train_args.year, "offering to train up to (default: latest)");
  train->add_option("--lab", train_args.lab, "last lab included (default: last lab)");
  train->add_option("--bundle", train_args.bundle, "bundle directory to write");
  train->add_flag("--with-baselines", train_args.with_baselines,
                  "also train the solution-time and correctness models");

  RecommendArgs rec_args;
  auto* recommend = app.add_subcommand("recommend", "print top-k homework for a student as JSON");
  add_settings(recommend, settings);
  recommend->add_option("--bundle", rec_args.bundle, "trained bundle directory")->required();
  recommend->add_option("--student", rec_args.student, "student id")->required();
  recommend->add_option("--week", rec_args.week, "current course week")->required();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "run the accuracy and suitability experiments");
  add_settings(evaluate, settings);
  evaluate->add_option("--test-year", eval_args.test_year, "held-out offering (default: latest)");
  evaluate->add_option("--experiment", eval_args.experiment, "1, 2 or all")
      ->check(CLI::IsMember({"1", "2", "all"}));

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "answer recommendation requests over HTTP");
  add_settings(serve, settings);
  serve->add_option("--bundle", serve_args.bundle, "trained bundle directory")->required();
  serve->add_option("--host", serve_args.host, "listen address");
  serve->add_option("--port", serve_args.port, "listen port");

  std::vector<std::string> argv_store{"skillrec"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    const Config cfg = resolve(chosen, settings);
    err << "seed: " << cfg.hyper.seed << '\n';
    if (chosen == ingest) return cmd_ingest(cfg, out);
    if (chosen == train) return cmd_train(cfg, train_args, out);
    if (chosen == recommend) return cmd_recommend(cfg, rec_args, out);
    if (chosen == evaluate) return cmd_evaluate(cfg, eval_args, out, err);
    return cmd_serve(cfg, serve_args, out, err);
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  }
}

}  // namespace skillrec::cli
