#include "meshfair/scenario.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "meshfair/rate_region.hpp"

namespace meshfair {

using nlohmann::json;

namespace {

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<double>();
}

Hop parse_hop(const json& j) {
  Hop hop;
  if (j.is_array()) {
    if (j.size() < 3) throw std::invalid_argument("scenario: hop needs [from, to, channel]");
    hop.from = j[0].get<std::string>();
    hop.to = j[1].get<std::string>();
    hop.channel = j[2].get<std::string>();
    if (j.size() > 3) hop.loss_rate = j[3].get<double>();
  } else {
    hop.from = j.at("from").get<std::string>();
    hop.to = j.at("to").get<std::string>();
    hop.channel = j.at("channel").get<std::string>();
    hop.loss_rate = number_or(j, "loss_rate", 0.0);
  }
  return hop;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: JSON parse error: ") + e.what());
  }

  Scenario s;
  s.name = j.value("name", "scenario");
  s.hash = fnv1a64(j.dump());

  if (!j.contains("wlans") || !j.contains("stations") || !j.contains("flows"))
    throw std::invalid_argument("scenario: wlans, stations and flows sections are required");

  for (const auto& jw : j["wlans"]) {
    double sigma = jw.at("sigma").get<double>();
    double t_c = jw.at("t_c").get<double>();
    double a = sigma / t_c;
    double pbar = number_or(jw, "pbar", pbar_max(a));
    double y = number_or(jw, "y", 0.0);
    s.topology.wlans.push_back(
        WlanParams::make(jw.at("id").get<std::string>(), sigma, t_c, pbar, y));
  }
  for (const auto& js : j["stations"]) {
    Station st;
    st.id = js.at("id").get<std::string>();
    for (const auto& c : js.at("channels")) st.channels.push_back(c.get<std::string>());
    st.mesh_point = js.value("mesh_point", false);
    s.topology.stations.push_back(std::move(st));
  }
  for (const auto& jf : j["flows"]) {
    Flow f;
    f.id = jf.at("id").is_string() ? jf["id"].get<std::string>()
                                   : "flow" + std::to_string(jf["id"].get<long>());
    f.source = jf.at("source").get<std::string>();
    for (const auto& jh : jf.at("route")) f.route.push_back(parse_hop(jh));
    f.l_bits = number_or(jf, "l_bits", 1.0);
    f.phy_rate = number_or(jf, "phy_rate", 0.0);
    f.weight = number_or(jf, "weight", 0.0);
    f.max_rate = number_or(jf, "max_rate", 0.0);
    if (jf.contains("loss_scaling"))
      for (const auto& [station, scaling] : jf["loss_scaling"].items())
        f.loss_scaling[station] = scaling.get<double>();
    s.topology.flows.push_back(std::move(f));
  }

  if (j.contains("solver")) {
    const auto& jo = j["solver"];
    if (jo.contains("mode")) s.mode = fairness_mode_from_string(jo["mode"].get<std::string>());
    if (jo.contains("pbar_overrides"))
      for (const auto& [channel, pbar] : jo["pbar_overrides"].items()) {
        bool found = false;
        for (auto& w : s.topology.wlans)
          if (w.channel_id == channel) {
            w.p_bar = pbar.get<double>();
            found = true;
          }
        if (!found)
          throw std::invalid_argument("scenario: pbar override for unknown channel " + channel);
      }
  }
  if (j.contains("sim")) {
    const auto& js = j["sim"];
    s.sim.seed = static_cast<std::uint64_t>(number_or(js, "seed", 1));
    s.sim.duration = number_or(js, "duration_s", 600.0);
    s.sim.window = number_or(js, "window_s", 10.0);
    s.sim.queue_capacity = static_cast<int>(number_or(js, "queue_capacity", 50));
    s.sim.cw_init = number_or(js, "cw_init", 32.0);
    s.warmup = number_or(js, "warmup_s", 20.0);
    if (js.contains("aimd")) {
      const auto& ja = js["aimd"];
      s.sim.aimd.alpha = number_or(ja, "alpha", 4.0);
      s.sim.aimd.beta = number_or(ja, "beta", 0.25);
      s.sim.aimd.period = number_or(ja, "period_s", 1.0);
      if (!ja.value("enabled", true)) s.sim.tau_source = sim::TauSource::config_x;
    }
    if (js.contains("tau_source")) {
      std::string t = js["tau_source"].get<std::string>();
      if (t == "aimd")
        s.sim.tau_source = sim::TauSource::aimd;
      else if (t == "config_y")
        s.sim.tau_source = sim::TauSource::config_y;
      else if (t == "config_x")
        s.sim.tau_source = sim::TauSource::config_x;
      else
        throw std::invalid_argument("scenario: unknown tau_source " + t);
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("scenario: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  for (const auto& w : s.topology.wlans) {
    json jw{{"id", w.channel_id}, {"sigma", w.sigma}, {"t_c", w.t_c}, {"pbar", w.p_bar}};
    if (w.y > 0.0) jw["y"] = w.y;
    j["wlans"].push_back(jw);
  }
  for (const auto& st : s.topology.stations) {
    json js{{"id", st.id}, {"channels", st.channels}};
    if (st.mesh_point) js["mesh_point"] = true;
    j["stations"].push_back(js);
  }
  for (const auto& f : s.topology.flows) {
    json jf{{"id", f.id}, {"source", f.source}, {"l_bits", f.l_bits}};
    if (f.phy_rate > 0.0) jf["phy_rate"] = f.phy_rate;
    if (f.weight > 0.0) jf["weight"] = f.weight;
    if (f.max_rate > 0.0) jf["max_rate"] = f.max_rate;
    for (const auto& hop : f.route) {
      json jh{{"from", hop.from}, {"to", hop.to}, {"channel", hop.channel}};
      if (hop.loss_rate > 0.0) jh["loss_rate"] = hop.loss_rate;
      jf["route"].push_back(jh);
    }
    if (!f.loss_scaling.empty()) jf["loss_scaling"] = f.loss_scaling;
    j["flows"].push_back(jf);
  }
  j["solver"]["mode"] = to_string(s.mode);
  auto& js = j["sim"];
  js["seed"] = s.sim.seed;
  js["duration_s"] = s.sim.duration;
  js["window_s"] = s.sim.window;
  js["warmup_s"] = s.warmup;
  js["queue_capacity"] = s.sim.queue_capacity;
  js["cw_init"] = s.sim.cw_init;
  js["aimd"] = {{"alpha", s.sim.aimd.alpha},
                {"beta", s.sim.aimd.beta},
                {"period_s", s.sim.aimd.period},
                {"enabled", s.sim.tau_source == sim::TauSource::aimd}};
  return j.dump(2);
}

}  // namespace meshfair
