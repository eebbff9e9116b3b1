// Tunes a toy objective over samples/svm.space with Hyperband and with a
// surrogate-filtered configuration, then prints each incumbent.

#include <cmath>
#include <iostream>

#include "smashy/smashy.hpp"

using namespace smashy;

int main() {
  Objective obj;
  obj.name = "toy-svm";
  obj.space = parse_space(read_file(SAMPLES_DIR "/svm.space"));
  obj.r_min = 1.0 / 27.0;
  const auto& space = obj.space;
  obj.model = [&space](const Config& c, double r, std::uint64_t seed) {
    const double lc = std::log10(space.value(c, "cost"));
    double y = (lc - 1.0) * (lc - 1.0);
    if (space.level(c, "kernel") != "linear") {
      const double lg = std::log10(space.value(c, "gamma"));
      y += 0.5 * (lg + 2.0) * (lg + 2.0) - 1.0;
    }
    if (space.level(c, "kernel") == "poly") y += 0.2 * space.value(c, "degree");
    Rng noise(seed);
    return y + (1.0 - r) * (0.5 + 0.3 * noise.normal());
  };

  const auto hb = preset(Preset::hb, 3.0, obj.r_min, 0, 60.0);
  const auto custom = parse_spec(read_file(SAMPLES_DIR "/smashy_equal.spec"));

  for (const auto& [name, spec] : {std::pair{"HB", hb}, std::pair{"filtered", custom}}) {
    const auto archive = run(spec, obj, 42);
    const auto best = incumbent(archive);
    std::cout << name << ": " << archive.size() << " evaluations, best cost "
              << best->cost << " at " << config_to_json(space, best->config).dump() << '\n';
  }
}
