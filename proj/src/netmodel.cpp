// SPDX-License-Identifier: Apache-2.0
#include "mtdfl/netmodel.hpp"

#include <cmath>
#include <limits>

#include "mtdfl/error.hpp"

namespace mtdfl {
namespace {

constexpr double kGridTol = 1e-9;

bool is_multiple(double v, double step) {
  const double q = v / step;
  return std::abs(q - std::round(q)) <= kGridTol * std::max(1.0, std::abs(q));
}

bool horizontal(Heading h) { return h == Heading::East || h == Heading::West; }

bool inside(const GridWorld& w, const Eigen::Vector2d& p) {
  const double tol = kGridTol * w.extent();
  return p.x() >= -tol && p.y() >= -tol && p.x() <= w.extent() + tol && p.y() <= w.extent() + tol;
}

bool leaves_world(const GridWorld& w, const Eigen::Vector2d& junction, Heading h) {
  return !inside(w, junction + w.cell_width * direction_of(h));
}

}  // namespace

bool GridWorld::on_grid(const Eigen::Vector2d& p) const {
  return inside(*this, p) && (is_multiple(p.x(), cell_width) || is_multiple(p.y(), cell_width));
}

bool GridWorld::is_junction(const Eigen::Vector2d& p) const {
  return inside(*this, p) && is_multiple(p.x(), cell_width) && is_multiple(p.y(), cell_width);
}

Eigen::Vector2d direction_of(Heading h) {
  switch (h) {
    case Heading::North: return {0.0, 1.0};
    case Heading::South: return {0.0, -1.0};
    case Heading::East: return {1.0, 0.0};
    case Heading::West: return {-1.0, 0.0};
  }
  return {0.0, 0.0};
}

Heading reversed(Heading h) {
  switch (h) {
    case Heading::North: return Heading::South;
    case Heading::South: return Heading::North;
    case Heading::East: return Heading::West;
    case Heading::West: return Heading::East;
  }
  return h;
}

Heading turned(Heading h, Turn t) {
  if (t == Turn::Straight) return h;
  // Clockwise order seen from above with y pointing north.
  static constexpr Heading cw[] = {Heading::North, Heading::East, Heading::South, Heading::West};
  int idx = 0;
  while (cw[idx] != h) ++idx;
  return cw[(idx + (t == Turn::Right ? 1 : 3)) % 4];
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

Turn sample_turn(Rng& rng, const TurnProbabilities& p) {
  const double total = p.straight + p.right + p.left;
  if (!(total > 0.0) || p.straight < 0.0 || p.right < 0.0 || p.left < 0.0)
    throw DomainError("turn probabilities must be non-negative with a positive sum");
  const double u = uniform01(rng) * total;
  if (u < p.straight) return Turn::Straight;
  if (u < p.straight + p.right) return Turn::Right;
  return Turn::Left;
}

std::vector<Device> step_mobility(const GridWorld& world, std::vector<Device> devices, double dt,
                                  Rng& rng, const TurnProbabilities& turns) {
  if (dt < 0.0) throw DomainError("mobility step requires dt >= 0");
  const double cw = world.cell_width;
  for (Device& d : devices) {
    const int moving = horizontal(d.heading) ? 0 : 1;
    if (!inside(world, d.position) || !is_multiple(d.position[1 - moving], cw))
      throw InvalidStateError("device " + std::to_string(d.id) + " is off the road grid");
    if (d.speed < 0.0) throw DomainError("device speed must be non-negative");

    double remaining = d.speed * dt;
    if (remaining > 0.0 && world.is_junction(d.position) && leaves_world(world, d.position, d.heading))
      d.heading = reversed(d.heading);

    while (remaining > 0.0) {
      const int axis = horizontal(d.heading) ? 0 : 1;
      const double s = direction_of(d.heading)[axis];
      const double a = d.position[axis];
      const double q = a / cw;
      const double next = s > 0 ? (std::floor(q + kGridTol) + 1.0) * cw : (std::ceil(q - kGridTol) - 1.0) * cw;
      const double dist = std::abs(next - a);
      if (remaining < dist) {
        d.position[axis] = a + s * remaining;
        remaining = 0.0;
      } else {
        d.position[axis] = next;
        d.position[1 - axis] = std::round(d.position[1 - axis] / cw) * cw;
        remaining -= dist;
        d.heading = turned(d.heading, sample_turn(rng, turns));
        if (leaves_world(world, d.position, d.heading)) d.heading = reversed(d.heading);
      }
    }
  }
  return devices;
}

Device place_on_grid(const GridWorld& world, Rng& rng, Device proto) {
  const bool along_x = bernoulli(rng, 0.5);
  const double line = static_cast<double>(uniform_int(rng, 0, world.cells_per_side)) * world.cell_width;
  const double at = uniform(rng, 0.0, world.extent());
  const bool forward = bernoulli(rng, 0.5);
  if (along_x) {
    proto.position = {at, line};
    proto.heading = forward ? Heading::East : Heading::West;
  } else {
    proto.position = {line, at};
    proto.heading = forward ? Heading::North : Heading::South;
  }
  return proto;
}

Assignment assign_coverage(const std::vector<Device>& devices,
                           const std::vector<BaseStation>& stations) {
  Assignment out(devices.size());
  for (std::size_t u = 0; u < devices.size(); ++u) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < stations.size(); ++i) {
      const double d = (devices[u].position - stations[i].position).norm();
      if (d <= stations[i].coverage_radius && d < best) {
        best = d;
        out[u] = i;
      }
    }
  }
  return out;
}

double channel_gain(double distance, const ChannelParams& params) {
  if (!(distance > 0.0)) throw DomainError("channel gain is singular at distance <= 0");
  return params.path_loss_coeff * std::pow(distance, -params.path_loss_exponent);
}

double link_rate(double bandwidth, double tx_power, double gain, double noise, LogBase base) {
  if (!(bandwidth > 0.0) || !(noise > 0.0) || tx_power < 0.0 || gain < 0.0)
    throw DomainError("link rate needs bandwidth > 0, noise > 0, power >= 0, gain >= 0");
  const double nats = std::log1p(tx_power * gain / noise);
  return bandwidth * (base == LogBase::Natural ? nats : nats / std::log(2.0));
}

NetworkSnapshot build_snapshot(std::size_t iteration, const std::vector<Device>& devices,
                               const std::vector<BaseStation>& stations,
                               const ChannelParams& params) {
  const auto n = static_cast<Eigen::Index>(devices.size());
  const auto m = static_cast<Eigen::Index>(stations.size());
  NetworkSnapshot s;
  s.iteration = iteration;
  s.assignment = assign_coverage(devices, stations);
  s.uplink = Eigen::MatrixXd::Zero(n, m);
  s.downlink = Eigen::MatrixXd::Zero(n, m);
  s.bs_cpu.resize(m);
  s.backhaul.resize(m);
  s.dev_cpu.resize(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    s.bs_cpu[i] = stations[i].cpu_freq;
    s.backhaul[i] = stations[i].backhaul_rate;
  }
  for (Eigen::Index u = 0; u < n; ++u) {
    const Device& d = devices[u];
    s.positions.push_back(d.position);
    s.dev_cpu[u] = d.cpu_freq;
    if (!s.assignment[u]) continue;
    const auto i = static_cast<Eigen::Index>(*s.assignment[u]);
    const BaseStation& bs = stations[i];
    const double dist = std::max((d.position - bs.position).norm(), params.min_distance);
    const double g = channel_gain(dist, params);
    s.uplink(u, i) = link_rate(bs.bandwidth, d.tx_power, g, params.noise_power, params.log_base);
    s.downlink(u, i) = link_rate(bs.bandwidth, bs.tx_power, g, params.noise_power, params.log_base);
  }
  return s;
}

}  // namespace mtdfl
