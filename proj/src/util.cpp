#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "geoproto/parallel.hpp"
#include "geoproto/random.hpp"

namespace geoproto {

double Rng::normal(double mean, double sd) {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("GEOPROTO_THREADS"); env != nullptr && *env != '\0') {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace geoproto
