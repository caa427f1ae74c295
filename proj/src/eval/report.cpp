#include "mmrec/eval/report.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace mmrec::eval {

namespace {

std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fixed(const std::optional<double>& v, int digits) { return v ? fixed(*v, digits) : "-"; }

std::string label(Metric m, int k) { return std::string(to_string(m)) + "@" + std::to_string(k); }

}  // namespace

void write_table(std::ostream& os, const EvalReport& report, int k) {
  os << "model";
  for (Subset s : kSubsets)
    for (Metric m : kMetrics) os << '\t' << to_string(s) << ' ' << label(m, k);
  os << '\n';
  os << "users";
  for (std::size_t si = 0; si < kSubsets.size(); ++si)
    for (std::size_t mi = 0; mi < kMetrics.size(); ++mi) os << '\t' << report.subset_users[si];
  os << '\n';
  for (const ModelResult& model : report.models) {
    os << models::display_name(model.kind);
    for (Subset s : kSubsets)
      for (Metric m : kMetrics) {
        const Cell& c = model.cell(s, m, k);
        os << '\t' << fixed(c.mean, 4) << (c.mean && c.significant ? "*" : "");
      }
    os << '\n';
  }
}

void write_long(std::ostream& os, const EvalReport& report) {
  os << "model\tsubset\tmetric\tk\tusers\tseeds\tmean\tstd\tstatistic\tp_value\tsignificant\n";
  for (const ModelResult& model : report.models)
    for (Subset s : kSubsets)
      for (Metric m : kMetrics)
        for (int k : report.ks) {
          const Cell& c = model.cell(s, m, k);
          os << models::slug(model.kind) << '\t' << to_string(s) << '\t' << to_string(m) << '\t' << k << '\t'
             << c.users << '\t' << model.seeds.size() << '\t' << fixed(c.mean, 6) << '\t'
             << (c.mean ? fixed(c.std, 6) : "-") << '\t';
          if (c.test)
            os << fixed(c.test->statistic, 6) << '\t' << fixed(c.test->p_value, 6) << '\t' << (c.significant ? 1 : 0);
          else
            os << "-\t-\t-";
          os << '\n';
        }
}

void write_curves(std::ostream& os, const EvalReport& report) {
  os << "model\tsubset\tmetric";
  for (int k : report.ks) os << "\t@" << k;
  os << '\n';
  for (const ModelResult& model : report.models)
    for (Subset s : kSubsets)
      for (Metric m : kMetrics) {
        os << models::slug(model.kind) << '\t' << to_string(s) << '\t' << to_string(m);
        for (int k : report.ks) os << '\t' << fixed(model.cell(s, m, k).mean, 6);
        os << '\n';
      }
}

void write_event_curve(std::ostream& os, const EventCountCurve& curve) {
  os << "events\tmodel\tsubset\tusers\t" << label(Metric::hit_rate, curve.k) << '\t' << label(Metric::map, curve.k)
     << '\n';
  for (std::size_t i = 0; i < curve.ns.size(); ++i)
    for (const ModelResult& model : curve.reports[i].models)
      for (Subset s : kSubsets) {
        os << curve.ns[i] << '\t' << models::slug(model.kind) << '\t' << to_string(s) << '\t'
           << model.cell(s, Metric::hit_rate, curve.k).users;
        for (Metric m : kMetrics) os << '\t' << fixed(model.cell(s, m, curve.k).mean, 6);
        os << '\n';
      }
}

void write_order_table(std::ostream& os, const OrderAblation& ablation) {
  os << "model\tmetric";
  for (Subset s : kSubsets) os << '\t' << to_string(s);
  os << '\n';
  for (std::size_t i = 0; i < ablation.rows.size(); i += kSubsets.size() * kMetrics.size()) {
    for (std::size_t mi = 0; mi < kMetrics.size(); ++mi) {
      const OrderAblationRow& first = ablation.rows[i + mi];
      os << models::display_name(first.kind) << '\t' << label(first.metric, ablation.k);
      for (std::size_t si = 0; si < kSubsets.size(); ++si) {
        const OrderAblationRow& r = ablation.rows[i + si * kMetrics.size() + mi];
        os << '\t' << (r.relative_change ? fixed(*r.relative_change * 100.0, 2) + "%" : "-");
      }
      os << '\n';
    }
  }
}

void write_order_long(std::ostream& os, const OrderAblation& ablation) {
  os << "model\tsubset\tmetric\tk\tshuffles\toriginal\tshuffled\trelative_change\n";
  for (const OrderAblationRow& r : ablation.rows)
    os << models::slug(r.kind) << '\t' << to_string(r.subset) << '\t' << to_string(r.metric) << '\t' << ablation.k
       << '\t' << ablation.shuffles << '\t' << fixed(r.original, 6) << '\t' << fixed(r.shuffled, 6) << '\t'
       << fixed(r.relative_change, 6) << '\n';
}

}  // namespace mmrec::eval
