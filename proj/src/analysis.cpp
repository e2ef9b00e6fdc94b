#include "medsel/analysis.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "medsel/errors.hpp"
#include "medsel/metrics.hpp"
#include "medsel/parallel.hpp"
#include "medsel/trainer.hpp"

namespace medsel {
namespace {

constexpr Strategy kAllStrategies[] = {Strategy::medselect, Strategy::clinical, Strategy::random, Strategy::kmedoids};
constexpr TaskGroup kGroups[] = {TaskGroup::nonholdout, TaskGroup::holdout};

bool in_group(const SelectionRecord& r, TaskGroup g) { return r.holdout == (g == TaskGroup::holdout); }

std::vector<double> column(const SelectionProfile& p, TaskGroup g, double SelectionRecord::*field) {
  std::vector<double> out;
  for (const auto& r : p.records)
    if (in_group(r, g)) out.push_back(r.*field);
  return out;
}

BootstrapCI percentile_ci(std::vector<double>& stats, double estimate, double level) {
  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - level;
  return {estimate, sorted_quantile(stats, alpha / 2.0), sorted_quantile(stats, 1.0 - alpha / 2.0)};
}

void check_bootstrap_args(std::size_t n, std::size_t resamples, double level) {
  if (n == 0) throw std::invalid_argument("bootstrap: empty sample");
  if (resamples == 0) throw std::invalid_argument("bootstrap: resamples must be positive");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap: level must lie in (0, 1)");
}

struct Feature {
  const char* name;
  double SelectionRecord::*field;
  bool needs_pairs;
};

constexpr Feature kFeatures[] = {
    {"frontal", &SelectionRecord::frontal_fraction, false},
    {"female", &SelectionRecord::female_fraction, false},
    {"age", &SelectionRecord::mean_age, false},
    {"pairwise_l2", &SelectionRecord::pairwise_mean, true},
    {"pairwise_l2_max", &SelectionRecord::pairwise_max, true},
};

}  // namespace

SeededRng evaluation_rng(std::uint64_t seed, std::size_t k, std::uint64_t task_id) {
  return SeededRng(derive_seed(seed, {k, task_id}));
}

SelectionProfile profile_selections(Strategy strategy, const SelectorParams* params, std::span<const Task> tasks,
                                    std::size_t k, std::uint64_t seed, SelectionMode mode, std::size_t workers) {
  SelectionProfile profile;
  profile.strategy = strategy;
  profile.k = k;
  profile.records.resize(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const Task& task = tasks[i];
    const PoolView pool = task.pool();
    if (pool.clinical.size() != pool.size())
      throw DataError("task " + std::to_string(task.id()) + " has no clinical features for its pool");
    SeededRng rng = evaluation_rng(seed, k, task.id()).child(1);
    const SelectionOutcome out = select(strategy, params, pool, k, rng, nullptr, mode);
    LabelingOracle oracle(task);

    SelectionRecord& r = profile.records[i];
    r.task_id = task.id();
    r.condition = task.condition();
    r.holdout = task.holdout();
    r.reward = selection_reward(task, out.indices, oracle);
    Mat64 chosen(0, pool.embeddings.cols());
    double frontal = 0.0, female = 0.0;
    for (std::size_t idx : out.indices) {
      r.item_ids.push_back(task.pool_item_id(idx));
      const ClinicalFeatures& c = pool.clinical[idx];
      frontal += c.laterality;
      female += c.sex;
      r.ages.push_back(c.age);
      chosen.append_row(pool.embeddings.row(idx));
    }
    const double kd = static_cast<double>(out.indices.size());
    r.frontal_fraction = frontal / kd;
    r.female_fraction = female / kd;
    r.mean_age = mean(r.ages);
    if (out.indices.size() >= 2) {
      PairwiseL2 stats = pairwise_l2_stats(chosen);
      r.pairwise_mean = stats.mean;
      r.pairwise_max = stats.max;
      r.pairwise = std::move(stats.distances);
    }
  });
  return profile;
}

BootstrapCI bootstrap_mean_ci(std::span<const double> values, std::size_t resamples, std::uint64_t seed,
                              double level) {
  check_bootstrap_args(values.size(), resamples, level);
  SeededRng rng(seed);
  const std::size_t n = values.size();
  std::vector<double> stats(resamples);
  for (double& s : stats) {
    KahanSum acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(values[rng.uniform_index(n)]);
    s = acc.value() / static_cast<double>(n);
  }
  return percentile_ci(stats, mean(values), level);
}

BootstrapCI paired_bootstrap_ci(std::span<const double> a, std::span<const double> b, std::size_t resamples,
                                std::uint64_t seed, double level) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_bootstrap_ci: samples differ in length");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return bootstrap_mean_ci(diff, resamples, seed, level);
}

std::string_view group_name(TaskGroup g) { return g == TaskGroup::holdout ? "holdout" : "nonholdout"; }

ComparisonReport compare(std::span<const SelectionProfile> profiles, std::span<const SelectionProfile> random_control,
                         const CompareOptions& options) {
  ComparisonReport report;
  std::map<std::size_t, std::map<Strategy, const SelectionProfile*>> by_k;
  for (const auto& p : profiles) {
    auto& slot = by_k[p.k][p.strategy];
    if (slot != nullptr)
      throw std::invalid_argument("compare: two profiles for " + std::string(strategy_name(p.strategy)) +
                                  " at k=" + std::to_string(p.k));
    slot = &p;
  }
  std::map<std::size_t, const SelectionProfile*> control_by_k;
  for (const auto& p : random_control) control_by_k[p.k] = &p;

  auto same_tasks = [](const SelectionProfile& a, const SelectionProfile& b) {
    if (a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i)
      if (a.records[i].task_id != b.records[i].task_id) return false;
    return true;
  };

  for (const auto& [k, strategies] : by_k) {
    const SelectionProfile& first = *strategies.begin()->second;
    for (const auto& [s, p] : strategies)
      if (!same_tasks(first, *p))
        throw DataError("compare: " + std::string(strategy_name(s)) + " at k=" + std::to_string(k) +
                        " covers a different task set");
    const auto control_it = control_by_k.find(k);
    const SelectionProfile* control = control_it == control_by_k.end() ? nullptr : control_it->second;
    if (control != nullptr && !same_tasks(first, *control))
      throw DataError("compare: random control at k=" + std::to_string(k) + " covers a different task set");

    const auto subject_it = strategies.find(options.subject);
    const SelectionProfile* subject = subject_it == strategies.end() ? nullptr : subject_it->second;
    std::vector<Strategy> references;
    if (options.references.empty()) {
      for (Strategy s : kAllStrategies)
        if (s != options.subject && strategies.count(s)) references.push_back(s);
    } else {
      for (Strategy s : options.references) {
        if (!strategies.count(s))
          throw ConfigError("compare: reference strategy " + std::string(strategy_name(s)) + " missing at k=" +
                            std::to_string(k));
        references.push_back(s);
      }
    }
    const auto random_it = strategies.find(Strategy::random);
    const SelectionProfile* random = random_it == strategies.end() ? nullptr : random_it->second;

    for (TaskGroup g : kGroups) {
      const std::size_t n = column(first, g, &SelectionRecord::reward).size();
      if (n == 0) continue;
      const auto gi = static_cast<std::uint64_t>(g);

      for (Strategy s : kAllStrategies) {
        const auto it = strategies.find(s);
        if (it == strategies.end()) continue;
        const auto rewards = column(*it->second, g, &SelectionRecord::reward);
        report.summaries.push_back(
            {k, s, g, n,
             bootstrap_mean_ci(rewards, options.bootstrap_resamples,
                               derive_seed(options.bootstrap_seed, {k, gi, static_cast<std::uint64_t>(s)}),
                               options.level)});
      }

      if (subject != nullptr) {
        const auto subject_rewards = column(*subject, g, &SelectionRecord::reward);
        for (Strategy ref : references) {
          const auto ref_rewards = column(*strategies.at(ref), g, &SelectionRecord::reward);
          report.improvements.push_back(
              {k, g, options.subject, ref, n,
               paired_bootstrap_ci(subject_rewards, ref_rewards, options.bootstrap_resamples,
                                   derive_seed(options.bootstrap_seed, {k, gi, 16 + static_cast<std::uint64_t>(ref)}),
                                   options.level)});
          for (const Feature& f : kFeatures) {
            if (f.needs_pairs && k < 2) continue;
            const auto a = column(*subject, g, f.field);
            const auto b = column(*strategies.at(ref), g, f.field);
            TTestRow row{k, g, f.name, options.subject, ref, mean(a), mean(b), {}, {}, {}};
            if (a.size() >= 2 && b.size() >= 2 && (sample_variance(a) > 0.0 || sample_variance(b) > 0.0)) {
              const WelchResult w = welch_ttest(a, b);
              row.t = w.t;
              row.p = w.p;
              row.dof = w.dof;
            }
            report.ttests.push_back(std::move(row));
          }
        }
      }
    }

    if (random == nullptr) continue;
    std::vector<std::pair<std::string, const SelectionProfile*>> comparisons;
    std::vector<Strategy> compared;
    if (subject != nullptr) compared.push_back(options.subject);
    for (Strategy s : references)
      if (s != Strategy::random && std::find(compared.begin(), compared.end(), s) == compared.end())
        compared.push_back(s);
    for (Strategy s : compared) comparisons.emplace_back(std::string(strategy_name(s)) + "_vs_random", strategies.at(s));
    if (control != nullptr) comparisons.emplace_back("random_vs_random_control", control);

    for (const auto& [name, p] : comparisons) {
      const std::size_t start = report.wasserstein.size();
      for (std::size_t i = 0; i < p->records.size(); ++i) {
        const SelectionRecord& x = p->records[i];
        const SelectionRecord& r = random->records[i];
        WassersteinRow row;
        row.k = k;
        row.task_id = x.task_id;
        row.holdout = x.holdout;
        row.comparison = name;
        if (!x.pairwise.empty() && !r.pairwise.empty()) row.pairwise_l2 = wasserstein1(x.pairwise, r.pairwise);
        row.age = wasserstein1(x.ages, r.ages);
        report.wasserstein.push_back(std::move(row));
      }
      for (TaskGroup g : kGroups) {
        std::vector<double> pw, age;
        for (std::size_t i = start; i < report.wasserstein.size(); ++i) {
          const WassersteinRow& row = report.wasserstein[i];
          if (row.holdout != (g == TaskGroup::holdout)) continue;
          age.push_back(row.age);
          if (row.pairwise_l2) pw.push_back(*row.pairwise_l2);
        }
        if (age.empty()) continue;
        WassersteinSummary s{k, g, name, age.size(), {}, mean(age)};
        if (!pw.empty()) s.mean_pairwise_l2 = mean(pw);
        report.wasserstein_summaries.push_back(std::move(s));
      }
    }
  }
  return report;
}

}  // namespace medsel
