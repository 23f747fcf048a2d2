#include "meshfair/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

namespace meshfair::sim {

namespace {

struct TxFlow {
  int flow;
  int hop;  // index into the flow's route
};

struct Transmitter {
  int station;
  int channel;
  std::string station_id;
  std::vector<TxFlow> flows;
  double cw = 32.0;
  double tau_fixed = 0.0;
};

struct Handoff {
  double time;
  long seq;
  int flow;
  int hop;  // arrival into the queue feeding this hop
  bool operator>(const Handoff& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

// Portable uniform in [0,1): mt19937_64 is bit-exact across platforms.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double u01() { return (gen() >> 11) * 0x1.0p-53; }
};

}  // namespace

std::optional<double> WlanWindow::pidle() const {
  if (slots == 0) return std::nullopt;
  return double(idle_slots) / double(slots);
}

double SimMeasurement::flow_mbps(std::size_t w, std::size_t f) const {
  return delivered_bits[w][f] / window / 1e6;
}

double SimMeasurement::flow_airtime_first_hop(std::size_t w, std::size_t f) const {
  return airtime[w][f][first_hop_channel_[f]] / window;
}

double aimd_step(double cw, double measured_pidle, double pidle_target,
                 const AimdParams& params, double cw_floor, double cw_ceil,
                 bool* additive) {
  bool add = !(measured_pidle > pidle_target);
  double next = add ? cw + params.alpha : cw * (1.0 - params.beta);
  if (additive) *additive = add;
  return std::clamp(std::round(next), cw_floor, cw_ceil);
}

std::optional<double> measure_pidle(long idle_slots, long total_slots) {
  if (total_slots <= 0) return std::nullopt;
  return double(idle_slots) / double(total_slots);
}

bool backpressure_admit(int next_hop_occupancy, int queue_capacity, bool next_is_sink) {
  return next_is_sink || next_hop_occupancy < queue_capacity;
}

SimMeasurement run(const MeshTopology& topo, const std::vector<WlanConfigRow>& config,
                   const SimConfig& sim) {
  if (sim.duration <= 0.0 || sim.window <= 0.0)
    throw std::invalid_argument("sim: duration and window must be positive");
  if (sim.queue_capacity < 1) throw std::invalid_argument("sim: queue capacity must be >= 1");
  if (sim.aimd.alpha <= 0.0 || sim.aimd.beta <= 0.0 || sim.aimd.beta >= 1.0 ||
      sim.aimd.period <= 0.0)
    throw std::invalid_argument("sim: bad AIMD parameters");

  const std::size_t nc = topo.wlans.size();
  const std::size_t nf = topo.flows.size();
  FlowSets fs = flow_sets(topo);

  auto channel_index = [&](const std::string& id) {
    for (std::size_t c = 0; c < nc; ++c)
      if (topo.wlans[c].channel_id == id) return static_cast<int>(c);
    throw std::invalid_argument("sim: unknown channel " + id);
  };

  // Runtime config lookup: per (station, channel) fixed x, per channel y and
  // P_idle target.
  std::vector<double> pidle_target(nc, 0.0);
  std::vector<double> y_design(nc, 0.0);
  std::map<StationChannel, double> x_config;
  for (std::size_t c = 0; c < nc; ++c)
    pidle_target[c] = 1.0 / topo.wlans[c].p_bar;
  for (const auto& row : config) {
    int c = channel_index(row.channel);
    if (row.pidle_target > 0.0) pidle_target[c] = row.pidle_target;
    y_design[c] = row.y;
    if (row.stations.size() != row.x.size())
      throw std::invalid_argument("sim: config stations/x size mismatch on " + row.channel);
    for (std::size_t k = 0; k < row.stations.size(); ++k) {
      if (!topo.station(row.stations[k]))
        throw std::invalid_argument("sim: config references unknown station " +
                                    row.stations[k]);
      x_config[{row.stations[k], row.channel}] = row.x[k];
    }
  }

  // Transmitters per channel in topology station order.
  std::vector<Transmitter> transmitters;
  std::vector<std::vector<int>> tx_of_channel(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    auto it = fs.transmitters.find(topo.wlans[c].channel_id);
    if (it == fs.transmitters.end()) continue;
    for (const auto& station_id : it->second) {
      Transmitter tx;
      tx.station_id = station_id;
      tx.channel = static_cast<int>(c);
      tx.cw = sim.cw_init;
      if (sim.tau_source == TauSource::config_x) {
        auto xc = x_config.find({station_id, topo.wlans[c].channel_id});
        if (xc == x_config.end())
          throw std::invalid_argument("sim: config_x run lacks x for " + station_id + "@" +
                                      topo.wlans[c].channel_id);
        tx.tau_fixed = xc->second / (1.0 + xc->second);
      } else if (sim.tau_source == TauSource::config_y) {
        double y = y_design[c];
        if (y <= 0.0)
          throw std::invalid_argument("sim: config_y run lacks y for " +
                                      topo.wlans[c].channel_id);
        tx.tau_fixed = y / (1.0 + y);
      }
      for (std::size_t p = 0; p < nf; ++p) {
        const Flow& f = topo.flows[p];
        for (std::size_t h = 0; h < f.route.size(); ++h)
          if (f.route[h].from == station_id &&
              f.route[h].channel == topo.wlans[c].channel_id)
            tx.flows.push_back({static_cast<int>(p), static_cast<int>(h)});
      }
      tx_of_channel[c].push_back(static_cast<int>(transmitters.size()));
      transmitters.push_back(std::move(tx));
    }
  }

  // Queues: occupancy[flow][hop]; the source queue is hop 0 and starts full.
  std::vector<std::vector<int>> occupancy(nf);
  SimMeasurement m;
  m.seed = sim.seed;
  m.duration = sim.duration;
  m.window = sim.window;
  m.channels.reserve(nc);
  for (const auto& w : topo.wlans) m.channels.push_back(w.channel_id);
  m.injected.assign(nf, 0);
  m.delivered.assign(nf, 0);
  m.in_queue.assign(nf, 0);
  m.idle_slots.assign(nc, 0);
  m.success_slots.assign(nc, 0);
  m.collision_slots.assign(nc, 0);
  for (std::size_t p = 0; p < nf; ++p) {
    const Flow& f = topo.flows[p];
    m.flows.push_back(f.id);
    if (f.route.empty()) throw std::invalid_argument("sim: flow with empty route " + f.id);
    m.first_hop_channel_.push_back(channel_index(f.route.front().channel));
    occupancy[p].assign(f.route.size(), 0);
    occupancy[p][0] = sim.queue_capacity;
    m.injected[p] = sim.queue_capacity;
  }

  const std::size_t nw = static_cast<std::size_t>(std::ceil(sim.duration / sim.window));
  m.delivered_bits.assign(nw, std::vector<double>(nf, 0.0));
  m.airtime.assign(nw, std::vector<std::vector<double>>(nf, std::vector<double>(nc, 0.0)));
  m.wlan.assign(nw, std::vector<WlanWindow>(nc));

  // Spread a duration across measurement windows.
  auto add_time = [&](double start, double dur, auto&& sink) {
    double end = std::min(start + dur, sim.duration);
    double t = start;
    while (t < end) {
      std::size_t w = std::min(static_cast<std::size_t>(t / sim.window), nw - 1);
      double boundary = std::min((w + 1) * sim.window, end);
      sink(w, boundary - t);
      t = boundary;
    }
  };

  Rng rng(sim.seed);
  std::priority_queue<Handoff, std::vector<Handoff>, std::greater<Handoff>> handoffs;
  long handoff_seq = 0;

  std::vector<double> clock(nc, 0.0);
  std::vector<double> next_aimd(nc, sim.aimd.period);
  std::vector<long> period_idle(nc, 0), period_slots(nc, 0);
  std::vector<char> done(nc, 0);
  bool aimd_active = sim.tau_source == TauSource::aimd;

  std::vector<int> eligible;  // per-slot scratch: transmitter's eligible flows
  for (;;) {
    // Advance the channel with the smallest local clock.
    int c = -1;
    for (std::size_t k = 0; k < nc; ++k) {
      if (done[k] || tx_of_channel[k].empty()) continue;
      if (c < 0 || clock[k] < clock[c]) c = static_cast<int>(k);
    }
    if (c < 0) break;
    double t = clock[c];
    if (t >= sim.duration) {
      done[c] = 1;
      continue;
    }
    // Handoffs timestamped up to the globally-earliest clock are in the past
    // for every channel.
    while (!handoffs.empty() && handoffs.top().time <= t) {
      const Handoff& h = handoffs.top();
      ++occupancy[h.flow][h.hop];
      handoffs.pop();
    }

    const WlanParams& wp = topo.wlans[c];
    // Attempt draws for stations with at least one admissible frame.
    int attempts = 0;
    int winner = -1;
    for (int ti : tx_of_channel[c]) {
      Transmitter& tx = transmitters[ti];
      bool has_frame = false;
      for (const TxFlow& tf : tx.flows) {
        const Flow& f = topo.flows[tf.flow];
        bool last = tf.hop + 1 == static_cast<int>(f.route.size());
        int next_occ = last ? 0 : occupancy[tf.flow][tf.hop + 1];
        if (occupancy[tf.flow][tf.hop] > 0 &&
            backpressure_admit(next_occ, sim.queue_capacity, last)) {
          has_frame = true;
          break;
        }
      }
      if (!has_frame) continue;
      double tau = aimd_active ? std::min(1.0, 2.0 / (tx.cw - 1.0)) : tx.tau_fixed;
      if (rng.u01() < tau) {
        ++attempts;
        winner = ti;
      }
    }

    double slot_dur;
    std::size_t slot_window = std::min(static_cast<std::size_t>(t / sim.window), nw - 1);
    if (attempts == 0) {
      slot_dur = wp.sigma;
      ++m.idle_slots[c];
      ++m.wlan[slot_window][c].idle_slots;
      ++period_idle[c];
      add_time(t, slot_dur, [&](std::size_t w, double d) { m.wlan[w][c].idle_time += d; });
    } else if (attempts == 1) {
      Transmitter& tx = transmitters[winner];
      // TXOP burst: one frame from each admissible flow queue.
      eligible.clear();
      for (std::size_t i = 0; i < tx.flows.size(); ++i) {
        const TxFlow& tf = tx.flows[i];
        const Flow& f = topo.flows[tf.flow];
        bool last = tf.hop + 1 == static_cast<int>(f.route.size());
        int next_occ = last ? 0 : occupancy[tf.flow][tf.hop + 1];
        if (occupancy[tf.flow][tf.hop] > 0 &&
            backpressure_admit(next_occ, sim.queue_capacity, last))
          eligible.push_back(static_cast<int>(i));
      }
      slot_dur = double(eligible.size()) * wp.t_c;
      ++m.success_slots[c];
      add_time(t, slot_dur, [&](std::size_t w, double d) { m.wlan[w][c].success_time += d; });
      double frame_start = t;
      for (int i : eligible) {
        const TxFlow& tf = tx.flows[i];
        const Flow& f = topo.flows[tf.flow];
        bool last = tf.hop + 1 == static_cast<int>(f.route.size());
        --occupancy[tf.flow][tf.hop];
        if (tf.hop == 0) {  // infinitely backlogged source refills its queue
          ++occupancy[tf.flow][0];
          ++m.injected[tf.flow];
        }
        double frame_end = frame_start + wp.t_c;
        add_time(frame_start, wp.t_c,
                 [&](std::size_t w, double d) { m.airtime[w][tf.flow][c] += d; });
        double credit_t = std::min(frame_end, sim.duration * (1.0 - 1e-12));
        std::size_t wdel = std::min(static_cast<std::size_t>(credit_t / sim.window), nw - 1);
        if (last) {
          ++m.delivered[tf.flow];
          m.delivered_bits[wdel][tf.flow] += f.l_bits;
        } else {
          handoffs.push({frame_end, handoff_seq++, tf.flow, tf.hop + 1});
        }
        frame_start = frame_end;
      }
    } else {
      slot_dur = wp.t_c;
      ++m.collision_slots[c];
      add_time(t, slot_dur, [&](std::size_t w, double d) { m.wlan[w][c].collision_time += d; });
    }
    ++m.wlan[slot_window][c].slots;
    ++period_slots[c];
    // Station-mean CW integrated over the slot for the trace CSV.
    if (aimd_active) {
      double cw_mean = 0.0;
      for (int ti : tx_of_channel[c]) cw_mean += transmitters[ti].cw;
      cw_mean /= double(tx_of_channel[c].size());
      add_time(t, slot_dur, [&](std::size_t w, double d) { m.wlan[w][c].cw_time += cw_mean * d; });
    }

    clock[c] = t + slot_dur;

    if (aimd_active) {
      while (clock[c] >= next_aimd[c]) {
        auto pidle = measure_pidle(period_idle[c], period_slots[c]);
        if (pidle) {
          for (int ti : tx_of_channel[c]) {
            Transmitter& tx = transmitters[ti];
            bool additive = false;
            double before = tx.cw;
            tx.cw = aimd_step(tx.cw, *pidle, pidle_target[c], sim.aimd, sim.cw_floor,
                              sim.cw_ceil, &additive);
            if (next_aimd[c] <= sim.duration)
              m.cw_updates.push_back({next_aimd[c], tx.station_id, wp.channel_id, before,
                                      tx.cw, additive});
          }
        }
        period_idle[c] = 0;
        period_slots[c] = 0;
        next_aimd[c] += sim.aimd.period;
      }
    }
    if (clock[c] >= sim.duration) done[c] = 1;
  }

  for (std::size_t p = 0; p < nf; ++p) {
    long long queued = 0;
    for (int occ : occupancy[p]) queued += occ;
    // frames still in the air at the end count as queued at their next hop
    m.in_queue[p] = queued;
  }
  while (!handoffs.empty()) {
    m.in_queue[handoffs.top().flow] += 1;
    handoffs.pop();
  }
  return m;
}

}  // namespace meshfair::sim
