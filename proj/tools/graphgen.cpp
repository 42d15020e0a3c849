#include <CLI11.hpp>

#include <iostream>

#include "edgeprune/error.hpp"
#include "edgeprune/graphgen.hpp"

using namespace edgeprune;

int main(int argc, char** argv) {
  CLI::App app{"Writes the example application graphs and a loopback platform"};
  std::string kind;
  std::string out = "-";
  graphgen::VehicleOptions vehicle;
  double unit_ms = 10.0;
  std::uint32_t url = 4;
  std::vector<std::string> devices;
  std::uint16_t base_port = 7100;
  app.add_option("kind", kind, "vehicle, dual, dcal, deep, dpg, platform or fixture:<name>")->required();
  app.add_option("-o,--out", out, "Output file (default stdout)");
  app.add_option("--frames", vehicle.frames)->capture_default_str();
  app.add_option("--seed", vehicle.seed)->capture_default_str();
  app.add_option("--output-path", vehicle.output_path, "Where the final actor writes its results")
      ->capture_default_str();
  app.add_option("--unit-ms", unit_ms, "D-CAL time unit")->capture_default_str();
  app.add_option("--url", url, "DPG upper rate limit")->capture_default_str();
  app.add_option("--device", devices, "Platform device ids");
  app.add_option("--base-port", base_port)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    Json doc;
    if (kind == "vehicle") {
      doc = graphgen::vehicle_graph(vehicle);
    } else if (kind == "dual") {
      doc = graphgen::dual_input_graph(vehicle);
    } else if (kind == "dcal") {
      doc = graphgen::dcal_graph(unit_ms, vehicle.frames);
    } else if (kind == "deep") {
      doc = graphgen::deep_chain_graph(0.0, vehicle.frames);
    } else if (kind == "dpg") {
      doc = graphgen::dpg_graph(url, vehicle.frames, vehicle.seed);
    } else if (kind == "platform") {
      if (devices.empty()) devices = {"n2", "i7"};
      std::vector<std::pair<std::string, std::uint16_t>> list;
      for (const auto& d : devices) list.emplace_back(d, base_port);
      doc = graphgen::loopback_platform(list);
    } else if (kind.starts_with("fixture:")) {
      auto fixtures = graphgen::analyzer_fixtures();
      auto it = fixtures.find(kind.substr(8));
      if (it == fixtures.end()) throw Error("unknown fixture " + kind.substr(8));
      doc = it->second;
    } else {
      std::cerr << "unknown kind " << kind << "\n";
      return 2;
    }
    std::string text = doc.dump(2) + "\n";
    if (out == "-") {
      std::cout << text;
    } else {
      write_text_file(out, text);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
