#include "equifl/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "equifl/errors.hpp"
#include "equifl/fairness.hpp"

namespace equifl::report {

std::vector<int> hard_decisions(const nn::ModelParams& model,
                                const Eigen::MatrixXd& features) {
  const Eigen::VectorXd probs = nn::forward(model, features);
  std::vector<int> preds(static_cast<std::size_t>(probs.size()));
  for (Eigen::Index i = 0; i < probs.size(); ++i) preds[i] = probs[i] >= 0.5 ? 1 : 0;
  return preds;
}

ClientMetrics evaluate_client(int id, const nn::ModelParams& model,
                              const nn::Batch& test) {
  ClientMetrics out;
  out.client_id = id;
  out.test_size = static_cast<std::size_t>(test.size());
  if (test.size() == 0) {
    out.present = false;
    return out;
  }
  const std::vector<int> preds = hard_decisions(model, test.features);
  std::vector<int> labels(preds.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = test.labels[static_cast<Eigen::Index>(i)] > 0.5 ? 1 : 0;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == labels[i]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  out.delta_dp = fairness::delta_dp(preds, test.sensitive);
  out.delta_eo = fairness::delta_eo(preds, labels, test.sensitive);
  return out;
}

LocalEval evaluate_local(const std::vector<int>& ids,
                         const std::vector<const nn::ModelParams*>& models,
                         const std::vector<const nn::Batch*>& tests) {
  if (ids.size() != models.size() || ids.size() != tests.size()) {
    throw DimensionError("evaluate_local: ids/models/tests lengths differ");
  }
  LocalEval out;
  double acc = 0.0;
  double dp = 0.0;
  double eo = 0.0;
  std::size_t present = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ClientMetrics m = evaluate_client(ids[i], *models[i], *tests[i]);
    if (m.present) {
      acc += m.accuracy;
      dp += m.delta_dp;
      eo += m.delta_eo;
      ++present;
    } else {
      std::ostringstream msg;
      msg << "client " << ids[i] << " has an empty test split; excluded from averages";
      out.warnings.push_back(msg.str());
    }
    out.clients.push_back(std::move(m));
  }
  if (present > 0) {
    out.accuracy = acc / static_cast<double>(present);
    out.delta_dp = dp / static_cast<double>(present);
    out.delta_eo = eo / static_cast<double>(present);
  }
  return out;
}

GlobalMetrics evaluate_global(const nn::ModelParams& global,
                              const std::vector<const nn::Batch*>& tests) {
  std::vector<int> preds;
  std::vector<int> labels;
  std::vector<int> groups;
  for (const nn::Batch* test : tests) {
    if (test->size() == 0) continue;
    const std::vector<int> p = hard_decisions(global, test->features);
    preds.insert(preds.end(), p.begin(), p.end());
    for (Eigen::Index i = 0; i < test->size(); ++i) {
      labels.push_back(test->labels[i] > 0.5 ? 1 : 0);
      groups.push_back(test->sensitive[static_cast<std::size_t>(i)]);
    }
  }
  if (preds.empty()) throw InputError("evaluate_global: pooled test set is empty");
  return pooled_metrics(preds, labels, groups);
}

GlobalMetrics pooled_metrics(const std::vector<int>& predictions,
                             const std::vector<int>& labels,
                             const std::vector<int>& sensitive) {
  if (predictions.empty()) throw InputError("pooled_metrics: empty pool");
  if (predictions.size() != labels.size() || predictions.size() != sensitive.size()) {
    throw DimensionError("pooled_metrics: lengths differ");
  }
  GlobalMetrics out;
  out.pool_size = predictions.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
  out.delta_dp = fairness::delta_dp(predictions, sensitive);
  out.delta_eo = fairness::delta_eo(predictions, labels, sensitive);
  return out;
}

DistStats performance_fairness_stats(const std::vector<double>& values) {
  if (values.empty()) throw InputError("performance_fairness_stats: no values");
  DistStats out;
  out.min = *std::min_element(values.begin(), values.end());
  out.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

namespace {

nlohmann::json stats_to_json(const DistStats& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}};
}

nlohmann::json global_to_json(const GlobalMetrics& g) {
  return {{"pool_size", g.pool_size},
          {"accuracy", g.accuracy},
          {"delta_dp", g.delta_dp},
          {"delta_eo", g.delta_eo}};
}

}  // namespace

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json clients = nlohmann::json::array();
  for (const ClientMetrics& c : report.clients) {
    clients.push_back({{"client_id", c.client_id},
                       {"test_size", c.test_size},
                       {"accuracy", c.accuracy},
                       {"delta_dp", c.delta_dp},
                       {"delta_eo", c.delta_eo},
                       {"present", c.present}});
  }
  return {{"round", report.round},
          {"mode", report.mode},
          {"mu", report.mu},
          {"clients", clients},
          {"local", {{"accuracy", report.local_accuracy},
                     {"delta_dp", report.local_delta_dp},
                     {"delta_eo", report.local_delta_eo}}},
          {"global", global_to_json(report.global)},
          {"global_selective", global_to_json(report.global_selective)},
          {"accuracy_stats", stats_to_json(report.accuracy_stats)},
          {"delta_dp_stats", stats_to_json(report.delta_dp_stats)},
          {"stddev_convention", "population"},
          {"warnings", report.warnings}};
}

std::string history_to_csv(const std::vector<MetricsReport>& history) {
  std::ostringstream out;
  out << "round,scope,client_id,test_size,accuracy,delta_dp,delta_eo\n";
  out.precision(17);
  for (const MetricsReport& r : history) {
    for (const ClientMetrics& c : r.clients) {
      if (!c.present) continue;
      out << r.round << ",client," << c.client_id << ',' << c.test_size << ','
          << c.accuracy << ',' << c.delta_dp << ',' << c.delta_eo << '\n';
    }
    out << r.round << ",local_avg,,," << r.local_accuracy << ','
        << r.local_delta_dp << ',' << r.local_delta_eo << '\n';
    out << r.round << ",global,," << r.global.pool_size << ',' << r.global.accuracy
        << ',' << r.global.delta_dp << ',' << r.global.delta_eo << '\n';
    out << r.round << ",global_selective,," << r.global_selective.pool_size << ','
        << r.global_selective.accuracy << ',' << r.global_selective.delta_dp << ','
        << r.global_selective.delta_eo << '\n';
  }
  return out.str();
}

}  // namespace equifl::report
