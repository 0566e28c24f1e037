#include "skillrec/evaltool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <memory>
#include <thread>

#include <fmt/format.h>

#include "skillrec/error.hpp"

namespace skillrec {

using nlohmann::json;

std::string_view suitability_name(SuitabilityMode mode) noexcept {
  return mode == SuitabilityMode::Strict ? "strict" : "loose";
}

SuitabilityMode parse_suitability(std::string_view name) {
  if (name == "strict") return SuitabilityMode::Strict;
  if (name == "loose") return SuitabilityMode::Loose;
  throw Error(ErrorCode::InvalidArgument,
              "unknown suitability mode '" + std::string(name) + "' (expected strict or loose)");
}

bool is_suitable(const Problem& problem, const CourseSchedule& schedule, int last_submission_week,
                 int current_week, SuitabilityMode mode) {
  if (last_submission_week > current_week) {
    throw Error(ErrorCode::InvalidArgument, "last submission week is after the current week");
  }
  const auto window = topics_introduced_between(schedule, last_submission_week, current_week);
  const auto known = topics_introduced_between(schedule, 0, last_submission_week);
  bool touches_window = false;
  for (SkillTopic t : problem.skills.required_topics()) {
    const bool in_window = window.contains(t);
    if (!in_window && !known.contains(t)) return false;
    touches_window = touches_window || in_window;
  }
  return mode == SuitabilityMode::Loose || window.empty() || touches_window;
}

double random_baseline(std::span<const bool> suitable, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (suitable.empty()) throw Error(ErrorCode::EmptyPool, "no candidate problems");
  const auto hits = std::count(suitable.begin(), suitable.end(), true);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(suitable.size());
}

TemporalSplit TemporalSplit::make(const Corpus& corpus, int test_year) {
  const CourseSchedule& schedule = corpus.schedule(test_year);
  if (corpus.schedules().begin()->first >= test_year) {
    throw Error(ErrorCode::InsufficientData,
                "no offering before " + std::to_string(test_year) + " to train on");
  }
  TemporalSplit split;
  split.test_year = test_year;
  split.train = correct_submissions(corpus, test_year, 0);
  std::erase_if(split.train,
                [&](const LabeledSubmission& ls) { return ls.submission.offering_year >= test_year; });
  for (auto& ls : correct_submissions(corpus, test_year, schedule.lab_count())) {
    if (ls.submission.offering_year == test_year) {
      split.test_by_lab[ls.submission.lab_index].push_back(std::move(ls));
    }
  }
  return split;
}

TrainedUpto latest_source(std::span<const LabeledSubmission> data) {
  TrainedUpto out;
  for (const auto& ls : data) {
    out = std::max(out, TrainedUpto{ls.submission.offering_year, ls.submission.lab_index});
  }
  return out;
}

TrainedUpto latest_source(std::span<const Submission> data) {
  TrainedUpto out;
  for (const auto& s : data) out = std::max(out, TrainedUpto{s.offering_year, s.lab_index});
  return out;
}

void ProvenanceAudit::check(const std::string& artifact, TrainedUpto derived_from, int test_year,
                            int test_lab) {
  ++checks_;
  if (derived_from >= TrainedUpto{test_year, test_lab}) {
    violations_.push_back(fmt::format("{} at test lab {} of {} derives from lab {} of {}", artifact,
                                      test_lab, test_year, derived_from.lab_index,
                                      derived_from.offering_year));
  }
}

void ProvenanceAudit::merge(const ProvenanceAudit& other) {
  checks_ += other.checks_;
  violations_.insert(violations_.end(), other.violations_.begin(), other.violations_.end());
}

const SuitabilitySeries& Experiment2Result::find(RankingMetric metric,
                                                 SummarizationStrategy strategy) const {
  for (const auto& s : series) {
    if (s.metric == metric && s.strategy == strategy) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "no such series");
}

namespace {

std::vector<std::string> sources_of(std::span<const LabeledSubmission> data) {
  std::vector<std::string> out;
  out.reserve(data.size());
  for (const auto& ls : data) out.push_back(ls.submission.source);
  return out;
}

std::vector<std::string> sources_of(std::span<const Submission> data) {
  std::vector<std::string> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(s.source);
  return out;
}

double mean_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double spread(std::span<const double> v, bool sample) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(sample ? n - 1 : n));
}

// Runs f(i) for i in [0, n) on a bounded number of threads; results in order.
template <typename F>
auto parallel_map(std::size_t n, F f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  const std::size_t width = std::max<std::size_t>(1, std::thread::hardware_concurrency() / 2);
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t start = 0; start < n; start += width) {
    std::vector<std::future<R>> wave;
    for (std::size_t i = start; i < std::min(n, start + width); ++i) {
      wave.push_back(std::async(std::launch::async, f, i));
    }
    for (auto& w : wave) out.push_back(w.get());
  }
  return out;
}

}  // namespace

Experiment1Result accuracy_experiment(const Corpus& corpus, const EmbeddingProvider& provider,
                                      const Hyperparams& hyper, int test_year,
                                      ProvenanceAudit* audit) {
  const TemporalSplit split = TemporalSplit::make(corpus, test_year);
  if (split.train.empty()) {
    throw Error(ErrorCode::InsufficientData,
                "no correct lab submissions before " + std::to_string(test_year));
  }
  if (split.test_by_lab.empty()) {
    throw Error(ErrorCode::InsufficientData,
                "no correct lab submissions in " + std::to_string(test_year));
  }
  auto attempts = lab_submissions(corpus, test_year, 0);
  std::erase_if(attempts, [&](const Submission& s) { return s.offering_year >= test_year; });
  const auto embedder = provider.fit(sources_of(attempts));
  const TrainedUpto upto = std::max(latest_source(split.train), latest_source(attempts));
  const auto training = train_model_set(split.train, {}, *embedder, hyper, upto, false);

  Experiment1Result out;
  out.method = embedder->provider_tag();
  out.warnings = training.warnings;
  for (const auto& [lab, tests] : split.test_by_lab) {
    if (audit != nullptr) {
      audit->check("embedder", upto, test_year, lab);
      audit->check("skill models", upto, test_year, lab);
    }
    const auto embeddings = embedder->embed(sources_of(tests));
    out.labs.push_back(lab);
    for (std::size_t t = 0; t < kTopicCount; ++t) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < tests.size(); ++i) {
        const int truth = tests[i].skills.at(t).value();
        if (predict(training.models.skills[t], embeddings[i]).level == truth) ++hits;
      }
      out.accuracy[t].push_back(static_cast<double>(hits) / static_cast<double>(tests.size()));
    }
  }
  std::vector<double> means;
  for (std::size_t t = 0; t < kTopicCount; ++t) {
    out.mean[t] = mean_of(out.accuracy[t]);
    out.stdev[t] = spread(out.accuracy[t], true);
    means.push_back(out.mean[t]);
  }
  out.overall_mean = mean_of(means);
  out.overall_stdev = spread(means, false);
  return out;
}

namespace {

struct LabCell {
  // Indexed like Experiment2Result::series.
  std::vector<double> percent;
  double random = 0.0;
  std::size_t students = 0;
  std::vector<std::string> warnings;
  ProvenanceAudit audit;
};

LabCell evaluate_lab(const Corpus& corpus, const EmbeddingProvider& provider,
                     const Hyperparams& hyper, int test_year, int lab,
                     const EvaluationOptions& options) {
  const CourseSchedule& schedule = corpus.schedule(test_year);
  const int current_week = schedule.week_of_lab(lab);
  LabCell cell;

  const auto labeled = correct_submissions(corpus, test_year, lab - 1);
  const auto attempts = lab_submissions(corpus, test_year, lab - 1);
  const auto embedder = provider.fit(sources_of(attempts));
  cell.audit.check("embedder", latest_source(attempts), test_year, lab);
  cell.audit.check("skill models", latest_source(labeled), test_year, lab);
  cell.audit.check("baseline models", latest_source(attempts), test_year, lab);
  const auto training = train_model_set(labeled, attempts, *embedder, hyper,
                                        TrainedUpto{test_year, lab - 1}, true);
  for (const auto& w : training.warnings) {
    cell.warnings.push_back(fmt::format("lab {}: {}", lab, w));
  }
  const ModelSet& models = training.models;

  const auto pool = candidate_pool(corpus, test_year, current_week, false);
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "the offering has no homework problems");
  std::vector<std::string> pool_sources;
  for (const Problem* p : pool) pool_sources.push_back(p->reference_solution);
  const auto pool_embeddings = embedder->embed(pool_sources);

  std::vector<std::pair<std::string, SkillVector>> predicted;
  std::vector<std::pair<std::string, Embedding>> embedded_pool;
  std::map<std::string, std::size_t> pool_index;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const SkillVector skills = options.use_instructor_labels
                                   ? pool[i]->skills
                                   : predict_skills(models, pool_embeddings[i]);
    predicted.emplace_back(pool[i]->problem_id, skills);
    embedded_pool.emplace_back(pool[i]->problem_id, pool_embeddings[i]);
    pool_index[pool[i]->problem_id] = i;
  }
  const int k = options.k;
  const auto by_time =
      rank_baseline(RankingMetric::SolutionTime, models.baseline(BaselineKind::SolutionTime),
                    embedded_pool, k);
  const auto by_correct =
      rank_baseline(RankingMetric::Correctness, models.baseline(BaselineKind::Correctness),
                    embedded_pool, k);

  const auto strategies = all_strategies();
  std::vector<double> sums(kAllMetrics.size() * strategies.size(), 0.0);
  // The pool is the same for every student, so the random baseline is kept
  // as an exact count and divided once.
  std::size_t suitable_total = 0;
  std::size_t skipped = 0;

  for (const auto& seq : corpus.sequences()) {
    if (seq.offering_year != test_year) continue;
    SubmissionSequence scoped{seq.student_id, seq.offering_year, {}};
    int previous_lab = 0;
    for (const auto& s : seq.submissions) {
      if (s.lab_index > lab) continue;
      scoped.submissions.push_back(s);
      if (s.lab_index < lab) previous_lab = std::max(previous_lab, s.lab_index);
    }
    if (scoped.empty()) continue;
    const auto embedded = embed_sequence(scoped, *embedder, options.correct_only_context);
    if (embedded.empty()) {
      ++skipped;
      continue;
    }
    const int last_week = previous_lab == 0 ? 0 : schedule.week_of_lab(previous_lab);

    const std::unique_ptr<bool[]> suitable(new bool[pool.size()]);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      suitable[i] = is_suitable(*pool[i], schedule, last_week, current_week, options.mode);
    }
    const auto share = [&](const std::vector<RankedRecommendation>& list) {
      std::size_t hits = 0;
      for (const auto& r : list) hits += suitable[pool_index.at(r.problem_id)] ? 1 : 0;
      return static_cast<double>(hits) / static_cast<double>(list.size());
    };

    suitable_total += static_cast<std::size_t>(
        std::count(suitable.get(), suitable.get() + pool.size(), true));

    for (std::size_t s = 0; s < strategies.size(); ++s) {
      const StudentContext context = summarize(embedded, strategies[s], lab);
      const SkillVector student = predict_student_skills(models, context);
      sums[s] += share(rank(student, predicted, k));
      sums[strategies.size() + s] += share(by_time);
      sums[2 * strategies.size() + s] += share(by_correct);
    }
    ++cell.students;
  }
  if (skipped > 0) {
    cell.warnings.push_back(
        fmt::format("lab {}: {} students had no usable submissions", lab, skipped));
  }
  const double n = static_cast<double>(cell.students);
  for (double sum : sums) cell.percent.push_back(cell.students == 0 ? 0.0 : 100.0 * sum / n);
  cell.random = cell.students == 0
                    ? 0.0
                    : 100.0 * static_cast<double>(suitable_total) /
                          static_cast<double>(pool.size() * cell.students);
  return cell;
}

}  // namespace

Experiment2Result suitability_experiment(const Corpus& corpus, const EmbeddingProvider& provider,
                                         const Hyperparams& hyper, int test_year,
                                         const EvaluationOptions& options,
                                         ProvenanceAudit* audit) {
  if (options.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const TemporalSplit split = TemporalSplit::make(corpus, test_year);
  if (split.train.empty()) {
    throw Error(ErrorCode::InsufficientData,
                "no correct lab submissions before " + std::to_string(test_year));
  }
  const int labs = corpus.schedule(test_year).lab_count();
  const auto cells = parallel_map(static_cast<std::size_t>(labs), [&](std::size_t i) {
    return evaluate_lab(corpus, provider, hyper, test_year, static_cast<int>(i) + 1, options);
  });

  Experiment2Result out;
  out.k = options.k;
  out.mode = options.mode;
  for (auto m : kAllMetrics) {
    for (auto s : all_strategies()) out.series.push_back({m, s, {}});
  }
  for (int l = 1; l <= labs; ++l) {
    const LabCell& cell = cells[static_cast<std::size_t>(l - 1)];
    if (audit != nullptr) audit->merge(cell.audit);
    out.warnings.insert(out.warnings.end(), cell.warnings.begin(), cell.warnings.end());
    if (cell.students == 0) {
      out.warnings.push_back(fmt::format("lab {}: no students to evaluate", l));
      continue;
    }
    out.labs.push_back(l);
    out.students.push_back(cell.students);
    out.random.push_back(cell.random);
    for (std::size_t i = 0; i < out.series.size(); ++i) {
      out.series[i].percent.push_back(cell.percent[i]);
    }
  }
  return out;
}

json report_to_json(const EvaluationReport& report) {
  json j;
  j["test_year"] = report.test_year;
  j["seed"] = report.seed;
  j["config_digest"] = report.config_digest;
  j["provider"] = report.provider;
  if (report.experiment1) {
    const auto& e = *report.experiment1;
    json topics = json::array();
    for (std::size_t t = 0; t < kTopicCount; ++t) {
      topics.push_back({{"topic", topic_name(topic_from_index(t))},
                        {"accuracy", e.accuracy[t]},
                        {"mean", e.mean[t]},
                        {"stdev", e.stdev[t]}});
    }
    j["experiment1"] = {{"method", e.method},
                        {"labs", e.labs},
                        {"topics", topics},
                        {"mean", {{"mean", e.overall_mean}, {"stdev", e.overall_stdev}}},
                        {"warnings", e.warnings}};
  }
  if (report.experiment2) {
    const auto& e = *report.experiment2;
    json series = json::array();
    for (const auto& s : e.series) {
      series.push_back({{"metric", metric_name(s.metric)},
                        {"strategy", strategy_name(s.strategy)},
                        {"percent", s.percent}});
    }
    j["experiment2"] = {{"k", e.k},
                        {"suitability", suitability_name(e.mode)},
                        {"labs", e.labs},
                        {"students", e.students},
                        {"series", series},
                        {"random", e.random},
                        {"warnings", e.warnings}};
  }
  j["provenance"] = {{"checks", report.provenance.checks()},
                     {"violations", report.provenance.violations()}};
  return j;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace

void emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());
  }
  if (report.experiment1) {
    const auto& e = *report.experiment1;
    std::string csv = "topic,method,mean,stdev\n";
    for (std::size_t t = 0; t < kTopicCount; ++t) {
      csv += fmt::format("{},{},{:.4f},{:.4f}\n", topic_label(topic_from_index(t)), e.method,
                         e.mean[t], e.stdev[t]);
    }
    csv += fmt::format("Mean,{},{:.4f},{:.4f}\n", e.method, e.overall_mean, e.overall_stdev);
    write_file(out_dir / "experiment1.csv", csv);
  } else {
    std::filesystem::remove(out_dir / "experiment1.csv", ec);
  }
  if (report.experiment2) {
    const auto& e = *report.experiment2;
    std::string csv = "lab,metric,strategy,percent\n";
    for (std::size_t i = 0; i < e.labs.size(); ++i) {
      for (const auto& s : e.series) {
        csv += fmt::format("{},{},{},{:.4f}\n", e.labs[i], metric_name(s.metric),
                           strategy_name(s.strategy), s.percent[i]);
      }
      csv += fmt::format("{},random,any,{:.4f}\n", e.labs[i], e.random[i]);
    }
    write_file(out_dir / "experiment2.csv", csv);
  } else {
    std::filesystem::remove(out_dir / "experiment2.csv", ec);
  }
  write_file(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
}

}  // namespace skillrec
