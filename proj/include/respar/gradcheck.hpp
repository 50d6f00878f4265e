#ifndef RESPAR_GRADCHECK_HPP
#define RESPAR_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace respar {

// Central finite differences against every analytic gradient the trainer
// uses: the serial loss, the synthetic loss in penalty and ALM form, and the
// lambda-correction gradient, all on a d=4/h=4/L=3/batch-5 instance.
struct GradCheckReport {
  struct Entry {
    std::string name;
    double max_rel_err = 0.0;
  };
  std::vector<Entry> entries;
  double max_rel_err = 0.0;

  bool passed(double tol = 1e-6) const { return max_rel_err <= tol; }
};

GradCheckReport fd_gradcheck(std::uint64_t seed, double eps);

}  // namespace respar

#endif  // RESPAR_GRADCHECK_HPP
