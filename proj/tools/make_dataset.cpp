// Generates the bundled credit dataset: a deterministic synthetic rendition
// of the classic German-credit table with its documented marginals
// (690 male / 310 female; 191/499/109/201 per group-label cell).
//
// Label-informative attributes depend on the outcome only and
// group-informative attributes depend on gender only, so count-rebalancing
// methods can remove the label-group association while the marginal
// distributions stay realistic. Signal strengths are tunable from the
// command line; the committed file uses the defaults.

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairprep/rng.hpp"

using fairprep::Rng;

namespace {

struct Cell {
  const char* sex;
  const char* outcome;
  int count;
};

// Table marginals: 690/310 split, 191/499/109/201 per cell.
const Cell kCells[] = {
    {"male", "bad", 191},
    {"male", "good", 499},
    {"female", "bad", 109},
    {"female", "good", 201},
};

std::vector<double> blend(const std::vector<double>& a, const std::vector<double>& b, bool first,
                          double strength) {
  // interpolates between the pooled distribution and the conditional one
  std::vector<double> mean(a.size()), out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) mean[i] = 0.5 * (a[i] + b[i]);
  const auto& cond = first ? a : b;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = std::max(1e-6, mean[i] + strength * (cond[i] - mean[i]));
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

int clip_int(double v, int lo, int hi) {
  const int r = static_cast<int>(std::llround(v));
  return std::min(hi, std::max(lo, r));
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate the synthetic credit dataset and its schema"};
  std::string out_path = "data/german_credit.csv";
  std::string schema_path = "data/german_schema.json";
  std::uint64_t seed = 20240901;
  double label_signal = 1.0;
  double group_signal = 1.0;
  double bad_blur = 1.0;
  double male_bad_blur = 1.0;
  double ambiguous_bad = 0.0;
  double ambiguous_good = 0.0;
  app.add_option("--out", out_path, "dataset CSV path");
  app.add_option("--schema-out", schema_path, "schema JSON path");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--label-signal", label_signal, "0 erases label-feature association");
  app.add_option("--group-signal", group_signal, "0 erases group-feature association");
  app.add_option("--bad-blur", bad_blur,
                 "scales the bad class's signal down (1 = symmetric classes)");
  app.add_option("--male-bad-blur", male_bad_blur,
                 "extra signal scale on male bad rows (1 = no group asymmetry)");
  app.add_option("--ambiguous-bad", ambiguous_bad,
                 "fraction of bad rows drawn from the pooled feature distribution");
  app.add_option("--ambiguous-good", ambiguous_good,
                 "fraction of good rows drawn from the pooled feature distribution");
  CLI11_PARSE(app, argc, argv);

  // row order: lay cells out contiguously, then shuffle
  std::vector<int> cell_of_row;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < kCells[c].count; ++i) cell_of_row.push_back(c);
  Rng shuffle_rng(seed);
  shuffle_rng.shuffle(cell_of_row);

  Rng rng(seed + 1);
  std::string csv =
      "checking_status,duration_months,credit_history,purpose,credit_amount,savings,"
      "employment_since,installment_rate,personal_status,other_debtors,residence_since,"
      "property,age_years,housing,existing_credits,job,num_dependents,telephone,"
      "foreign_worker,sex,outcome\n";

  const std::vector<std::string> checking = {"ge_200", "lt_0", "no_account", "v0_200"};
  const std::vector<std::string> history = {"all_paid_duly", "critical_other", "delayed",
                                            "existing_paid", "none_taken"};
  const std::vector<std::string> savings = {"ge_1000", "lt_100", "unknown", "v100_500",
                                            "v500_1000"};
  const std::vector<std::string> employment = {"ge_7", "lt_1", "unemployed", "v1_4", "v4_7"};
  const std::vector<std::string> purpose = {"business", "car_new", "car_used",
                                            "education", "furniture", "radio_tv"};
  const std::vector<std::string> status = {"divorced", "married", "single", "widowed"};
  const std::vector<std::string> debtors = {"co_applicant", "guarantor", "none"};
  const std::vector<std::string> property = {"car_other", "real_estate", "savings_insurance",
                                             "unknown"};
  const std::vector<std::string> housing = {"free", "own", "rent"};
  const std::vector<std::string> job = {"management", "skilled", "unemployed_nonresident",
                                        "unskilled"};
  const std::vector<std::string> phone = {"none", "yes"};
  const std::vector<std::string> foreign = {"no", "yes"};

  for (int cell : cell_of_row) {
    const bool good = std::string(kCells[cell].outcome) == "good";
    const bool male = std::string(kCells[cell].sex) == "male";
    // the bad class can sit closer to the decision boundary than the good
    // one, optionally more so for male rows; a slice of each class carries
    // no label signal at all (credit files are full of borderline cases)
    double ls = label_signal * (good ? 1.0 : bad_blur * (male ? male_bad_blur : 1.0));
    if (rng.uniform() < (good ? ambiguous_good : ambiguous_bad)) ls = 0.0;

    // label-driven attributes
    const auto p_checking =
        blend({0.10, 0.15, 0.50, 0.25}, {0.10, 0.47, 0.12, 0.31}, good, ls);
    const auto p_history =
        blend({0.08, 0.35, 0.07, 0.45, 0.05}, {0.17, 0.17, 0.12, 0.44, 0.10}, good, ls);
    const auto p_savings =
        blend({0.12, 0.52, 0.19, 0.10, 0.07}, {0.03, 0.73, 0.07, 0.12, 0.05}, good, ls);
    const auto p_employment =
        blend({0.30, 0.14, 0.05, 0.33, 0.18}, {0.18, 0.26, 0.09, 0.33, 0.14}, good, ls);
    const auto p_property =
        blend({0.33, 0.30, 0.23, 0.14}, {0.33, 0.18, 0.21, 0.28}, good, ls);
    const auto p_housing = blend({0.10, 0.75, 0.15}, {0.13, 0.62, 0.25}, good, ls);
    const auto p_debtors = blend({0.04, 0.05, 0.91}, {0.07, 0.04, 0.89}, good, ls);
    const double duration_mu = 22.0 + ls * (good ? -6.0 : 6.0);
    const double duration_sd = good ? 7.0 : 10.0;
    const double amount_mu = std::log(2900.0) + ls * (good ? -0.14 : 0.30);
    const double amount_sd = good ? 0.55 : 0.65;
    const auto p_install = blend({0.15, 0.20, 0.25, 0.40}, {0.10, 0.15, 0.25, 0.50}, good, ls);

    // group-driven attributes (independent of the outcome)
    const auto p_purpose = blend({0.12, 0.28, 0.13, 0.07, 0.14, 0.26},
                                 {0.06, 0.16, 0.04, 0.10, 0.36, 0.28}, male, group_signal);
    const auto p_status = blend({0.12, 0.28, 0.55, 0.05}, {0.22, 0.50, 0.20, 0.08}, male,
                                group_signal);
    const auto p_phone = blend({0.55, 0.45}, {0.65, 0.35}, male, group_signal);
    const double age_mu = 35.5 + group_signal * (male ? 2.5 : -2.5);
    const double age_sd = male ? 11.0 : 10.0;
    const double p_two_dependents = 0.135 + group_signal * (male ? 0.065 : -0.065);

    // noise attributes
    const std::vector<double> p_job = {0.15, 0.63, 0.02, 0.20};
    const std::vector<double> p_credits = {0.55, 0.30, 0.10, 0.05};
    const std::vector<double> p_foreign = {0.04, 0.96};

    csv += checking[rng.categorical(p_checking)];
    csv += "," + std::to_string(clip_int(rng.normal(duration_mu, duration_sd), 4, 72));
    csv += "," + history[rng.categorical(p_history)];
    csv += "," + purpose[rng.categorical(p_purpose)];
    csv += "," + std::to_string(clip_int(std::exp(rng.normal(amount_mu, amount_sd)), 250, 18500));
    csv += "," + savings[rng.categorical(p_savings)];
    csv += "," + employment[rng.categorical(p_employment)];
    csv += "," + std::to_string(1 + static_cast<int>(rng.categorical(p_install)));
    csv += "," + status[rng.categorical(p_status)];
    csv += "," + debtors[rng.categorical(p_debtors)];
    csv += "," + std::to_string(1 + static_cast<int>(rng.below(4)));
    csv += "," + property[rng.categorical(p_property)];
    csv += "," + std::to_string(clip_int(rng.normal(age_mu, age_sd), 19, 75));
    csv += "," + housing[rng.categorical(p_housing)];
    csv += "," + std::to_string(1 + static_cast<int>(rng.categorical(p_credits)));
    csv += "," + job[rng.categorical(p_job)];
    csv += "," + std::to_string(rng.uniform() < p_two_dependents ? 2 : 1);
    csv += "," + phone[rng.categorical(p_phone)];
    csv += "," + foreign[rng.categorical(p_foreign)];
    csv += ",";
    csv += kCells[cell].sex;
    csv += ",";
    csv += kCells[cell].outcome;
    csv += "\n";
  }

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return 1;
  }
  out << csv;

  std::ofstream schema(schema_path);
  if (!schema) {
    std::cerr << "cannot write " << schema_path << "\n";
    return 1;
  }
  schema << R"({
  "columns": {
    "checking_status": "feature-categorical",
    "duration_months": "feature-continuous",
    "credit_history": "feature-categorical",
    "purpose": "feature-categorical",
    "credit_amount": "feature-continuous",
    "savings": "feature-categorical",
    "employment_since": "feature-categorical",
    "installment_rate": "feature-continuous",
    "personal_status": "feature-categorical",
    "other_debtors": "feature-categorical",
    "residence_since": "feature-continuous",
    "property": "feature-categorical",
    "age_years": "feature-continuous",
    "housing": "feature-categorical",
    "existing_credits": "feature-continuous",
    "job": "feature-categorical",
    "num_dependents": "feature-continuous",
    "telephone": "feature-categorical",
    "foreign_worker": "feature-categorical",
    "sex": "sensitive",
    "outcome": "label"
  },
  "good_label": "good",
  "sensitive_as_feature": false,
  "group_order": ["male", "female"]
}
)";

  std::cout << "wrote " << out_path << " (" << cell_of_row.size() << " rows) and " << schema_path
            << "\n";
  return 0;
}
