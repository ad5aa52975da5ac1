#include "unsure/score.hpp"

#include <algorithm>
#include <cmath>

namespace unsure {

ScoreField::ScoreField(Variant v) : v_(std::move(v)) {
  if (const auto* a = std::get_if<AnalyticScore>(&v_)) {
    require(!a->marginals.empty(), ErrorCode::invalid_argument,
            "analytic score needs at least one marginal");
  } else if (const auto* t = std::get_if<TabulatedScore>(&v_)) {
    require(t->grid_y.size() >= 2 && t->grid_y.size() == t->grid_s.size(),
            ErrorCode::invalid_argument, "tabulated score needs a grid");
    for (Eigen::Index i = 1; i < t->grid_y.size(); ++i) {
      require(t->grid_y[i] > t->grid_y[i - 1], ErrorCode::invalid_argument,
              "tabulated grid must be strictly increasing");
    }
  } else {
    require(static_cast<bool>(std::get<LearnedScore>(v_).field),
            ErrorCode::invalid_argument, "learned score needs a field");
  }
}

ScoreField ScoreField::analytic(NoisyMarginal marginal) {
  return ScoreField(AnalyticScore{{std::move(marginal)}});
}

ScoreField ScoreField::analytic_per_pixel(
    std::vector<NoisyMarginal> marginals) {
  return ScoreField(AnalyticScore{std::move(marginals)});
}

ScoreField ScoreField::tabulated(Vec grid_y, Vec grid_s) {
  return ScoreField(TabulatedScore{std::move(grid_y), std::move(grid_s)});
}

ScoreField ScoreField::learned(std::function<Vec(const Vec&)> field) {
  return ScoreField(LearnedScore{std::move(field)});
}

namespace {

double interp(const TabulatedScore& t, double y) {
  const auto& g = t.grid_y;
  const auto n = g.size();
  if (y <= g[0]) return t.grid_s[0];
  if (y >= g[n - 1]) return t.grid_s[n - 1];
  auto it = std::upper_bound(g.begin(), g.end(), y);
  Eigen::Index hi = it - g.begin();
  Eigen::Index lo = hi - 1;
  double w = (y - g[lo]) / (g[hi] - g[lo]);
  return (1.0 - w) * t.grid_s[lo] + w * t.grid_s[hi];
}

}  // namespace

Vec ScoreField::operator()(const Vec& y) const {
  if (const auto* a = std::get_if<AnalyticScore>(&v_)) {
    const auto& ms = a->marginals;
    if (ms.size() > 1) {
      require(static_cast<Eigen::Index>(ms.size()) == y.size(),
              ErrorCode::dimension_mismatch,
              "per-pixel score dimension mismatch");
    }
    Vec s(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const auto& m = ms.size() > 1 ? ms[i] : ms[0];
      s[i] = m.score(y[i]);
    }
    return s;
  }
  if (const auto* t = std::get_if<TabulatedScore>(&v_)) {
    Vec s(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) s[i] = interp(*t, y[i]);
    return s;
  }
  Vec s = std::get<LearnedScore>(v_).field(y);
  require(s.size() == y.size(), ErrorCode::dimension_mismatch,
          "learned score returned wrong dimension");
  return s;
}

Json ScoreMoments::to_json() const {
  Json j;
  j["n"] = n;
  j["sample_count"] = sample_count;
  j["radius"] = radius;
  j["trace_H"] = trace_H;
  j["autocorr"] = std::vector<double>(autocorr.begin(), autocorr.end());
  Json h = Json::array();
  for (int i = 0; i < H.rows(); ++i) {
    h.push_back(std::vector<double>(H.row(i).begin(), H.row(i).end()));
  }
  j["H"] = h;
  Json p = Json::array();
  for (int a = 0; a < 3; ++a) {
    p.push_back(std::vector<double>(pg.row(a).begin(), pg.row(a).end()));
  }
  j["pg"] = p;
  return j;
}

ScoreMoments ScoreMoments::from_json(const Json& j) {
  ScoreMoments m;
  m.n = j.value("n", 0);
  m.sample_count = j.value("sample_count", 0);
  m.radius = j.value("radius", 0);
  m.trace_H = j.value("trace_H", 0.0);
  auto ac = j.value("autocorr", std::vector<double>{});
  m.autocorr = Eigen::Map<const Vec>(ac.data(), ac.size());
  const auto& h = j.at("H");
  m.H.resize(h.size(), h.empty() ? 0 : h[0].size());
  for (Eigen::Index r = 0; r < m.H.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.H.cols(); ++c) {
      m.H(r, c) = h[r][c].get<double>();
    }
  }
  m.pg.resize(3, 3);
  const auto& p = j.at("pg");
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) m.pg(a, b) = p[a][b].get<double>();
  }
  return m;
}

ScoreMoments accumulate_moments(const ScoreField& field, const Dataset& data,
                                int radius) {
  require(data.count() > 0, ErrorCode::empty_dataset, "no samples");
  const int n = data.dim();
  require(radius >= 0 && 2 * radius < n, ErrorCode::invalid_argument,
          "autocorrelation radius must satisfy 0 <= r < n/2");

  ScoreMoments m;
  m.n = n;
  m.sample_count = data.count();
  m.radius = radius;
  m.H = Mat::Zero(n, n);
  m.autocorr = Vec::Zero(2 * radius + 1);
  m.pg = Mat::Zero(3, 3);

  for (int t = 0; t < data.count(); ++t) {
    Vec y = data.samples.row(t);
    Vec s = field(y);
    require(s.allFinite(), ErrorCode::degenerate_score,
            "score evaluated to a non-finite value");
    m.H.noalias() += s * s.transpose();
    for (int lag = -radius; lag <= radius; ++lag) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += s[i] * s[(i + lag + n) % n];
      m.autocorr[lag + radius] += acc / n;
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += std::pow(y[i], a) * std::pow(s[i], b);
        }
        m.pg(a, b) += acc;
      }
    }
  }
  m.H /= data.count();
  m.autocorr /= data.count();
  m.pg /= data.count();
  m.trace_H = m.H.trace();
  return m;
}

ScoreMoments analytic_moments(const NoisyMarginal& marginal, int n,
                              int radius) {
  require(n > 0, ErrorCode::invalid_argument, "n must be positive");
  require(radius >= 0 && 2 * radius < n, ErrorCode::invalid_argument,
          "autocorrelation radius must satisfy 0 <= r < n/2");
  ScoreMoments m;
  m.n = n;
  m.sample_count = 0;
  m.radius = radius;
  double es2 = marginal.expected_score_sq();
  m.trace_H = n * es2;
  m.H = es2 * Mat::Identity(n, n);
  m.autocorr = Vec::Zero(2 * radius + 1);
  m.autocorr[radius] = es2;
  m.pg = Mat::Zero(3, 3);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      m.pg(a, b) = n * marginal.expect([&](double y) {
        return std::pow(y, a) * std::pow(marginal.score(y), b);
      });
    }
  }
  return m;
}

double fd_divergence(const std::function<Vec(const Vec&)>& f, const Vec& y,
                     double step) {
  require(step > 0.0, ErrorCode::invalid_argument, "fd step must be positive");
  double div = 0.0;
  Vec yp = y;
  Vec ym = y;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double h = step * (1.0 + std::abs(y[i]));
    yp[i] = y[i] + h;
    ym[i] = y[i] - h;
    div += (f(yp)[i] - f(ym)[i]) / (2.0 * h);
    yp[i] = y[i];
    ym[i] = y[i];
  }
  return div;
}

}  // namespace unsure
