// Copyright (c) 2026 The accentfuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "accentfuse/autograd.hpp"

namespace accentfuse {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

/// Adam over the trainable, non-buffer parameters it is handed.
template <typename S>
class Adam {
 public:
  explicit Adam(AdamOptions opts) : opts_(opts) {}

  const AdamOptions& options() const { return opts_; }
  void set_lr(double lr) { opts_.lr = lr; }
  long step_count() const { return step_; }

  /// Applies one update. Returns the pre-clip global gradient norm.
  double Step(const std::vector<Parameter<S>*>& params) {
    double sq = 0;
    for (auto* p : params)
      if (Updatable(p)) sq += p->grad.template cast<double>().squaredNorm();
    const double norm = std::sqrt(sq);
    const double clip = (opts_.clip_norm > 0 && norm > opts_.clip_norm) ? opts_.clip_norm / norm : 1.0;
    ++step_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_));
    for (auto* p : params) {
      if (!Updatable(p)) continue;
      auto& st = state_[p->name];
      if (st.m.size() == 0) {
        st.m = Mat<S>::Zero(p->value.rows(), p->value.cols());
        st.v = Mat<S>::Zero(p->value.rows(), p->value.cols());
      }
      const Mat<S> g = p->grad * S(clip);
      st.m = S(opts_.beta1) * st.m + S(1 - opts_.beta1) * g;
      st.v = S(opts_.beta2) * st.v + S(1 - opts_.beta2) * g.cwiseProduct(g);
      const S step = S(opts_.lr / bc1);
      p->value.array() -= step * st.m.array() / ((st.v.array() / S(bc2)).sqrt() + S(opts_.eps));
    }
    return norm;
  }

 private:
  static bool Updatable(const Parameter<S>* p) { return p->trainable && !p->is_buffer && p->grad.size() != 0; }

  struct State {
    Mat<S> m, v;
  };
  AdamOptions opts_;
  std::map<std::string, State> state_;
  long step_ = 0;
};

}  // namespace accentfuse
