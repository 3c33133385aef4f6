#include "diffusion/tensor.hpp"

#include <sstream>

namespace linecolor {

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[" << t << "," << c << "," << h << "," << w << "]";
    return os.str();
}

Tensor vector_tensor(const std::vector<double>& values) {
    Tensor out(1, static_cast<int>(values.size()), 1, 1);
    out.v = values;
    return out;
}

Tensor randn_tensor(int t, int c, int h, int w, Rng& rng) {
    Tensor out(t, c, h, w);
    for (double& x : out.v) x = rng.normal();
    return out;
}

}  // namespace linecolor
