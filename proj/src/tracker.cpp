#include "occtrack/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "occtrack/assignment.hpp"
#include "occtrack/error.hpp"

namespace occtrack {

void TrackerParams::validate() const {
  if (!(gate_radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "gate_radius must be positive");
  if (!(alpha_emb >= 0.0) || !(alpha_geo >= 0.0) || !std::isfinite(alpha_emb) || !std::isfinite(alpha_geo)) {
    throw Error(ErrorKind::InvalidArgument, "association weights must be finite and non-negative");
  }
  if (!(memory_momentum >= 0.0 && memory_momentum <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "memory_momentum must lie in [0, 1]");
  }
  if (!(birth_conf >= 0.0 && birth_conf <= 1.0)) throw Error(ErrorKind::InvalidArgument, "birth_conf must lie in [0, 1]");
  if (death_age < 0) throw Error(ErrorKind::InvalidArgument, "death_age must be >= 0");
  if (!(velocity_blend >= 0.0 && velocity_blend <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "velocity_blend must lie in [0, 1]");
  }
}

TrackerParams tracker_params_from_json(const json& doc, const std::string& context) {
  StrictObject o(doc, context);
  TrackerParams p;
  if (o.has("schema_version") && o.get<int>("schema_version") != 1) {
    throw Error(ErrorKind::ConfigParseError, context + ": unsupported schema_version");
  }
  if (o.has("gate_radius")) {
    const json& g = o.at("gate_radius");
    // null stands for an unbounded gate
    p.gate_radius = g.is_null() ? std::numeric_limits<double>::infinity() : o.get<double>("gate_radius");
  }
  p.alpha_emb = o.get_or("alpha_emb", p.alpha_emb);
  p.alpha_geo = o.get_or("alpha_geo", p.alpha_geo);
  p.memory_momentum = o.get_or("memory_momentum", p.memory_momentum);
  p.birth_conf = o.get_or("birth_conf", p.birth_conf);
  p.death_age = o.get_or("death_age", p.death_age);
  p.velocity_blend = o.get_or("velocity_blend", p.velocity_blend);
  o.finish();
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigParseError, context + ": " + e.what());
  }
  return p;
}

json tracker_params_to_json(const TrackerParams& p) {
  return json{{"schema_version", 1},
              {"gate_radius", std::isfinite(p.gate_radius) ? json(p.gate_radius) : json(nullptr)},
              {"alpha_emb", p.alpha_emb},
              {"alpha_geo", p.alpha_geo},
              {"memory_momentum", p.memory_momentum},
              {"birth_conf", p.birth_conf},
              {"death_age", p.death_age},
              {"velocity_blend", p.velocity_blend}};
}

QueryBank predict(const QueryBank& bank, double dt) {
  if (!(dt >= 0.0)) throw Error(ErrorKind::InvalidArgument, "prediction interval must be >= 0");
  QueryBank out = bank;
  out.frame_time = bank.frame_time + dt;
  for (Query& q : out.queries) {
    q.anchor.set_center(q.anchor.center() + q.anchor.velocity() * dt);
    ++q.age;
  }
  return out;
}

double association_cost(const Query& q, const Detection& d, const TrackerParams& params) {
  const double dist = (q.anchor.center() - d.state.center()).norm();
  if (dist > params.gate_radius) return std::numeric_limits<double>::infinity();
  double cost = 0.0;
  if (params.alpha_emb > 0.0 && d.embedding_valid && !q.memory.empty() && !d.embedding.empty()) {
    cost += params.alpha_emb * (q.memory.values() - d.embedding.values()).norm();
  }
  if (params.alpha_geo > 0.0 && std::isfinite(params.gate_radius)) {
    cost += params.alpha_geo * dist / params.gate_radius;
  } else if (params.alpha_geo > 0.0) {
    cost += params.alpha_geo * dist;
  }
  return cost;
}

Assignment associate(const QueryBank& bank, std::span<const Detection> detections,
                     const TrackerParams& params) {
  params.validate();
  const std::size_t nq = bank.queries.size();
  const std::size_t nd = detections.size();
  Assignment result;

  Eigen::MatrixXd cost(static_cast<Eigen::Index>(nq), static_cast<Eigen::Index>(nd));
  std::vector<char> admissible(nq * nd, 0);
  double admissible_sum = 0.0;
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t d = 0; d < nd; ++d) {
      const double c = association_cost(bank.queries[q], detections[d], params);
      if (std::isfinite(c)) {
        admissible[q * nd + d] = 1;
        admissible_sum += c;
        cost(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(d)) = c;
      }
    }
  }
  // Any single inadmissible pair must cost more than every admissible pair combined.
  const double forbidden = 1.0 + 2.0 * admissible_sum;
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t d = 0; d < nd; ++d) {
      if (!admissible[q * nd + d]) cost(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(d)) = forbidden;
    }
  }

  const std::vector<int> match = min_cost_assignment(cost);
  std::vector<char> det_used(nd, 0);
  for (std::size_t q = 0; q < nq; ++q) {
    const int d = match[q];
    if (d >= 0 && admissible[q * nd + static_cast<std::size_t>(d)]) {
      result.pairs.emplace_back(q, static_cast<std::size_t>(d));
      det_used[static_cast<std::size_t>(d)] = 1;
    } else {
      result.unmatched_queries.push_back(q);
    }
  }
  for (std::size_t d = 0; d < nd; ++d) {
    if (!det_used[d]) result.unmatched_detections.push_back(d);
  }
  return result;
}

QueryBank update(const QueryBank& bank, const Assignment& assignment,
                 std::span<const Detection> detections, const TrackerParams& params,
                 std::vector<std::int64_t>* emitted) {
  params.validate();
  QueryBank out;
  out.next_track_id = bank.next_track_id;
  out.frame_time = bank.frame_time;
  if (emitted) emitted->clear();

  std::vector<int> matched_det(bank.queries.size(), -1);
  for (const auto& [q, d] : assignment.pairs) matched_det[q] = static_cast<int>(d);

  const double m = params.memory_momentum;
  for (std::size_t qi = 0; qi < bank.queries.size(); ++qi) {
    Query q = bank.queries[qi];
    if (matched_det[qi] < 0) {
      if (q.age > params.death_age) continue;
      out.queries.push_back(std::move(q));
      continue;
    }
    const Detection& det = detections[static_cast<std::size_t>(matched_det[qi])];
    const double dt = bank.frame_time - q.last_observed_time;
    Vec3 velocity = det.state.velocity();
    if (dt > 0.0) {
      const Vec3 displacement_rate = (det.state.center() - q.last_observed_center) / dt;
      velocity = params.velocity_blend * displacement_rate + (1.0 - params.velocity_blend) * det.state.velocity();
    }
    q.anchor = det.state;
    q.anchor.set_velocity(velocity);
    if (det.embedding_valid && !det.embedding.empty()) {
      if (q.memory.empty() || m == 0.0) {
        q.memory = det.embedding;
      } else if (m < 1.0) {
        const VecX blended = m * q.memory.values() + (1.0 - m) * det.embedding.values();
        q.memory = blended.norm() > 0.0 ? Embedding::normalized(blended) : det.embedding;
      }
    }
    q.confidence = det.confidence;
    q.age = 0;
    q.last_observed_center = det.state.center();
    q.last_observed_time = bank.frame_time;
    if (emitted) emitted->push_back(q.track_id);
    out.queries.push_back(std::move(q));
  }

  for (std::size_t d : assignment.unmatched_detections) {
    const Detection& det = detections[d];
    if (det.confidence < params.birth_conf || !det.embedding_valid || det.embedding.empty()) continue;
    Query q;
    q.track_id = out.next_track_id++;
    q.anchor = det.state;
    q.memory = det.embedding;
    q.descriptor = det.embedding.values();
    q.confidence = det.confidence;
    q.age = 0;
    q.last_observed_center = det.state.center();
    q.last_observed_time = bank.frame_time;
    if (emitted) emitted->push_back(q.track_id);
    out.queries.push_back(std::move(q));
  }
  return out;
}

TrajectorySet run_sequence(std::span<const DetectionFrame> frames, const TrackerParams& params) {
  params.validate();
  TrajectorySet out;
  out.frames.resize(frames.size());
  if (frames.empty()) return out;

  QueryBank bank;
  bank.frame_time = frames.front().time;
  std::vector<std::int64_t> emitted;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const double dt = f == 0 ? 0.0 : frames[f].time - frames[f - 1].time;
    if (dt < 0.0) {
      throw Error(ErrorKind::NonMonotonicTimestamps, "frame " + std::to_string(f) + " goes back in time");
    }
    bank = predict(bank, dt);
    const Assignment a = associate(bank, frames[f].detections, params);
    bank = update(bank, a, frames[f].detections, params, &emitted);
    for (const Query& q : bank.queries) {
      if (std::find(emitted.begin(), emitted.end(), q.track_id) == emitted.end()) continue;
      out.frames[f].push_back({q.track_id, q.anchor, q.confidence});
    }
  }
  return out;
}

}  // namespace occtrack
