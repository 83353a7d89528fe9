#include "hybridgp/dataset.hpp"

#include <sstream>

namespace hybridgp {

int Dataset::state_dim() const {
    for (const auto& tr : trials)
        if (!tr.steps.empty()) return static_cast<int>(tr.steps.front().x.size());
    return 0;
}

int Dataset::action_dim() const {
    for (const auto& tr : trials)
        if (!tr.steps.empty()) return static_cast<int>(tr.steps.front().u.size());
    return 0;
}

std::size_t Dataset::total_steps() const {
    std::size_t n = 0;
    for (const auto& tr : trials) n += tr.size();
    return n;
}

void Dataset::validate() const {
    const int dx = state_dim();
    const int du = action_dim();
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& steps = trials[i].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            const Step& s = steps[t];
            if (s.x.size() != dx || s.x_next.size() != dx || s.u.size() != du) {
                std::ostringstream os;
                os << "dataset: trial " << i << " step " << t << " has inconsistent dimensions";
                throw ConfigError(os.str());
            }
            if (!s.x.allFinite() || !s.u.allFinite() || !s.x_next.allFinite()) {
                std::ostringstream os;
                os << "dataset: trial " << i << " step " << t << " has non-finite values";
                throw ConfigError(os.str());
            }
            if (t + 1 < steps.size() &&
                (s.x_next - steps[t + 1].x).cwiseAbs().maxCoeff() > 1e-12) {
                std::ostringstream os;
                os << "dataset: trial " << i << " breaks chaining at step " << t;
                throw ConfigError(os.str());
            }
        }
    }
    if (labels) {
        if (labels->size() != trials.size()) throw ConfigError("dataset: label/trial count mismatch");
        for (std::size_t i = 0; i < trials.size(); ++i)
            if ((*labels)[i].size() != trials[i].size())
                throw ConfigError("dataset: label/step count mismatch");
    }
}

Mat Dataset::state_rows() const {
    Mat rows(static_cast<Eigen::Index>(total_steps()), state_dim());
    Eigen::Index r = 0;
    for (const auto& tr : trials)
        for (const auto& s : tr.steps) rows.row(r++) = s.x.transpose();
    return rows;
}

Vec join_state_action(const Vec& x, const Vec& u) {
    Vec xu(x.size() + u.size());
    xu << x, u;
    return xu;
}

}  // namespace hybridgp
