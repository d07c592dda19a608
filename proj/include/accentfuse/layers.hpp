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

// Parameter registration and the small composite layers shared by the
// acoustic, fusion and aggregation models.

#pragma once

#include <string>

#include "accentfuse/autograd.hpp"

namespace accentfuse {

template <typename S>
void FillUniform(Parameter<S>& p, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = S((2.0 * Uniform01(rng) - 1.0) * bound);
}

/// Weight `name/w` (in x out) and optional bias `name/b`, PyTorch-style
/// uniform(+-1/sqrt(in)) initialization.
template <typename S>
void AddLinear(ParameterStore<S>& store, const std::string& name, int in, int out, bool bias, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  FillUniform(store.Add(name + "/w", in, out), bound, rng);
  if (bias) FillUniform(store.Add(name + "/b", 1, out), bound, rng);
}

/// Convolution weight `name/w` ((kernel * in) x out), He-uniform.
template <typename S>
void AddConv(ParameterStore<S>& store, const std::string& name, int kernel, int in, int out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (static_cast<double>(kernel) * in));
  FillUniform(store.Add(name + "/w", kernel * in, out), bound, rng);
}

template <typename S>
void AddBatchNorm(ParameterStore<S>& store, const std::string& name, int channels) {
  store.Add(name + "/gamma", 1, channels).value.setOnes();
  store.Add(name + "/beta", 1, channels);
  store.Add(name + "/running_mean", 1, channels, true);
  store.Add(name + "/running_var", 1, channels, true).value.setOnes();
}

template <typename S>
void AddLayerNorm(ParameterStore<S>& store, const std::string& name, int channels) {
  store.Add(name + "/gamma", 1, channels).value.setOnes();
  store.Add(name + "/beta", 1, channels);
}

template <typename S>
Var ApplyLinear(Graph<S>& g, ParameterStore<S>& store, const std::string& name, Var x) {
  Var w = g.Param(store.Get(name + "/w"));
  Var b = store.Has(name + "/b") ? g.Param(store.Get(name + "/b")) : Var{};
  return Linear(g, x, w, b);
}

template <typename S>
Var ApplyBatchNorm(Graph<S>& g, ParameterStore<S>& store, const std::string& name, Var x, bool training) {
  return BatchNorm(g, x, g.Param(store.Get(name + "/gamma")), g.Param(store.Get(name + "/beta")),
                   store.Get(name + "/running_mean"), store.Get(name + "/running_var"), training);
}

template <typename S>
Var ApplyLayerNorm(Graph<S>& g, ParameterStore<S>& store, const std::string& name, Var x) {
  return LayerNorm(g, x, g.Param(store.Get(name + "/gamma")), g.Param(store.Get(name + "/beta")));
}

/// Throws NumericError naming `layer` if the node holds a non-finite value.
template <typename S>
void CheckFinite(const Graph<S>& g, Var v, const std::string& layer) {
  if (!g.value(v).allFinite()) throw NumericError("non-finite activation at layer " + layer);
}

}  // namespace accentfuse
