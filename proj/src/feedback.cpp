#include "smq/feedback.hpp"

#include <cmath>
#include <stdexcept>

#include "smq/error.hpp"
#include "smq/queue.hpp"

namespace smq {

void FeedbackParams::validate() const {
  for (double v : {lambda0, lambda1, lambda, q1, q2}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("feedback rates must be positive and finite");
    }
  }
  if (k < 1) throw std::invalid_argument("feedback model needs k >= 1");
}

bool FeedbackParams::transient_regime() const {
  return k < 0.5 * lambda * (1.0 / lambda1 + 1.0 / lambda0);
}

double FeedbackParams::service_rate(int x1, int x2) const {
  if (x2 <= 0) return 0.0;
  return ((1 - x1) * q1 + x1 * q2) * x2;
}

void FeedbackPath::write_csv(std::ostream& os) const {
  os << "time,count,x1,x2\n";
  os.precision(17);
  for (std::size_t i = 0; i < times.size(); ++i) {
    os << times[i] << ',' << y[i] << ',' << x1[i] << ',' << x2[i] << '\n';
  }
}

FeedbackPath simulate_feedback(const FeedbackParams& params, std::uint64_t y0, double horizon,
                               Stream& rng, const FeedbackOptions& options) {
  // Zero multipliers are allowed here so that degenerate cases can be run.
  for (double v : {params.lambda0, params.lambda1}) {
    if (!(v > 0.0)) throw std::invalid_argument("switch rates must be positive");
  }
  if (params.lambda < 0.0 || params.q1 < 0.0 || params.q2 < 0.0 || params.k < 1) {
    throw std::invalid_argument("invalid feedback parameters");
  }
  int x1 = options.x1;
  int x2 = options.x2 < 0 ? params.k : options.x2;
  if ((x1 != 0 && x1 != 1) || x2 > params.k) {
    throw std::invalid_argument("initial environment out of range");
  }
  std::uint64_t y = y0;
  double t = 0.0;
  std::size_t events = 0;

  FeedbackPath path;
  auto record = [&] {
    path.times.push_back(t);
    path.x1.push_back(x1);
    path.x2.push_back(x2);
    path.y.push_back(y);
  };
  record();
  for (;;) {
    const double switch_rate = x1 == 0 ? params.lambda0 : params.lambda1;
    const double departure_rate = params.service_rate(x1, x2) * static_cast<double>(y);
    const double total = switch_rate + params.lambda + departure_rate;
    t += rng.exponential(total);
    if (t >= horizon) break;
    if (++events > options.max_events) {
      throw ExplosionError("feedback simulation exceeded " +
                           std::to_string(options.max_events) + " events");
    }
    const double u = rng.uniform() * total;
    if (u < switch_rate) {
      x1 = 1 - x1;
      x2 = params.k - x2;
    } else if (u < switch_rate + params.lambda) {
      ++y;
    } else {
      --x2;
      --y;
    }
    record();
  }
  t = horizon;
  record();
  return path;
}

std::vector<double> cycle_increments(const FeedbackPath& path, int anchor) {
  std::vector<double> out;
  bool have_start = false;
  double start_y = 0.0;
  for (std::size_t i = 1; i < path.times.size(); ++i) {
    if (path.x1[i] == anchor && path.x1[i - 1] != anchor) {
      const double yi = static_cast<double>(path.y[i]);
      if (have_start) out.push_back(yi - start_y);
      start_y = yi;
      have_start = true;
    }
  }
  return out;
}

double growth_rate(const FeedbackPath& path) {
  std::vector<double> c(path.y.begin(), path.y.end());
  return growth_rate(path.times, c);
}

}  // namespace smq
