#include "bbsteal/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "bbsteal/kernels.hpp"

namespace bbsteal {

namespace {

void ensure_batch(Batch& b, int n, const Dims& d) {
  if (b.n != n || b.c != d.c || b.h != d.h || b.w != d.w) {
    b = Batch(n, d.c, d.h, d.w);
  }
}

}  // namespace

void Net::finalize() {
  dims_.clear();
  dims_.reserve(layers.size());
  std::vector<int> skip_stack;
  Dims cur = in_dims;
  params.clear();

  for (size_t i = 0; i < layers.size(); ++i) {
    LayerSpec& L = layers[i];
    switch (L.kind) {
      case LayerKind::conv: {
        if (L.ci != cur.c) throw std::invalid_argument("Net: conv channel mismatch at layer " + std::to_string(i));
        Param w;
        w.name = "layer" + std::to_string(i) + ".conv.w";
        w.shape = {L.co, L.ci, L.k, L.k};
        w.v.assign(w.size(), 0.0f);
        L.param_w = static_cast<int>(params.size());
        params.push_back(std::move(w));
        Param b;
        b.name = "layer" + std::to_string(i) + ".conv.b";
        b.shape = {L.co};
        b.v.assign(L.co, 0.0f);
        L.param_b = static_cast<int>(params.size());
        params.push_back(std::move(b));
        cur = {L.co, conv_out_dim(cur.h, L.k, L.stride, L.pad), conv_out_dim(cur.w, L.k, L.stride, L.pad)};
        break;
      }
      case LayerKind::relu:
        break;
      case LayerKind::maxpool2:
        cur = {cur.c, cur.h / 2, cur.w / 2};
        break;
      case LayerKind::gap:
        cur = {cur.c, 1, 1};
        break;
      case LayerKind::dense: {
        if (L.in_dim != cur.size()) throw std::invalid_argument("Net: dense input mismatch at layer " + std::to_string(i));
        Param w;
        w.name = "layer" + std::to_string(i) + ".dense.w";
        w.shape = {L.out_dim, L.in_dim};
        w.v.assign(w.size(), 0.0f);
        L.param_w = static_cast<int>(params.size());
        params.push_back(std::move(w));
        Param b;
        b.name = "layer" + std::to_string(i) + ".dense.b";
        b.shape = {L.out_dim};
        b.v.assign(L.out_dim, 0.0f);
        L.param_b = static_cast<int>(params.size());
        params.push_back(std::move(b));
        cur = {L.out_dim, 1, 1};
        break;
      }
      case LayerKind::skip_save:
        skip_stack.push_back(static_cast<int>(i));
        break;
      case LayerKind::skip_add: {
        if (skip_stack.empty()) throw std::invalid_argument("Net: skip_add without skip_save");
        L.save_idx = skip_stack.back();
        skip_stack.pop_back();
        const Dims saved = dims_[L.save_idx];
        if (L.has_proj) {
          if (L.ci != saved.c) throw std::invalid_argument("Net: projection channel mismatch");
          Param w;
          w.name = "layer" + std::to_string(i) + ".proj.w";
          w.shape = {L.co, L.ci, L.k, L.k};
          w.v.assign(w.size(), 0.0f);
          L.param_w = static_cast<int>(params.size());
          params.push_back(std::move(w));
          Param b;
          b.name = "layer" + std::to_string(i) + ".proj.b";
          b.shape = {L.co};
          b.v.assign(L.co, 0.0f);
          L.param_b = static_cast<int>(params.size());
          params.push_back(std::move(b));
          const Dims proj_out = {L.co, conv_out_dim(saved.h, L.k, L.stride, L.pad),
                                 conv_out_dim(saved.w, L.k, L.stride, L.pad)};
          if (proj_out.c != cur.c || proj_out.h != cur.h || proj_out.w != cur.w) {
            throw std::invalid_argument("Net: projected skip shape mismatch");
          }
        } else if (saved.c != cur.c || saved.h != cur.h || saved.w != cur.w) {
          throw std::invalid_argument("Net: skip shape mismatch (projection needed)");
        }
        break;
      }
    }
    dims_.push_back(cur);
  }
  if (!skip_stack.empty()) throw std::invalid_argument("Net: unmatched skip_save");
  if (dims_.back().c != num_classes || dims_.back().h != 1 || dims_.back().w != 1) {
    throw std::invalid_argument("Net: final layer does not produce num_classes logits");
  }
  if (attention_layer < 0 || attention_layer >= static_cast<int>(layers.size())) {
    throw std::invalid_argument("Net: attention layer unset");
  }
}

void Net::init_params(Rng& rng) {
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& L = layers[i];
    if (L.param_w < 0) continue;
    Param& w = params[L.param_w];
    Param& b = params[L.param_b];
    double std_dev;
    if (L.kind == LayerKind::dense) {
      std_dev = std::sqrt(1.0 / static_cast<double>(L.in_dim));
    } else {
      std_dev = std::sqrt(2.0 / static_cast<double>(L.ci * L.k * L.k));
    }
    std_dev *= L.init_gain;
    for (auto& x : w.v) x = static_cast<float>(rng.normal(0.0, std_dev));
    for (auto& x : b.v) x = 0.0f;
  }
}

void Net::forward(const Batch& x, Workspace& ws, int from_layer) const {
  if (from_layer == 0) {
    ws.input = x;
  }
  ws.acts.resize(layers.size());
  ws.pool_idx.resize(layers.size());
  forward_from(ws, from_layer);
}

void Net::forward_from(Workspace& ws, int from_layer) const {
  const int n = ws.input.n;
  for (size_t i = from_layer; i < layers.size(); ++i) {
    const LayerSpec& L = layers[i];
    const Batch& in = (i == 0) ? ws.input : ws.acts[i - 1];
    Batch& out = ws.acts[i];
    const Dims& od = dims_[i];
    switch (L.kind) {
      case LayerKind::conv:
        ensure_batch(out, n, od);
        kpar::conv2d_fwd(in.v.data(), n, L.ci, in.h, in.w, params[L.param_w].v.data(),
                         params[L.param_b].v.data(), L.co, L.k, L.stride, L.pad, out.v.data());
        break;
      case LayerKind::relu:
        ensure_batch(out, n, od);
        kpar::relu_fwd(in.v.data(), out.v.data(), in.v.size());
        break;
      case LayerKind::maxpool2: {
        ensure_batch(out, n, od);
        ws.pool_idx[i].resize(out.v.size());
        kpar::maxpool2_fwd(in.v.data(), n, in.c, in.h, in.w, out.v.data(), ws.pool_idx[i].data());
        break;
      }
      case LayerKind::gap:
        ensure_batch(out, n, od);
        kpar::gap_fwd(in.v.data(), n, in.c, in.h, in.w, out.v.data());
        break;
      case LayerKind::dense:
        ensure_batch(out, n, od);
        kpar::dense_fwd(in.v.data(), n, L.in_dim, params[L.param_w].v.data(),
                        params[L.param_b].v.data(), L.out_dim, out.v.data());
        break;
      case LayerKind::skip_save:
        out = in;
        break;
      case LayerKind::skip_add: {
        out = in;
        const Batch& saved = ws.acts[L.save_idx];
        if (L.has_proj) {
          Batch proj(n, od.c, od.h, od.w);
          kpar::conv2d_fwd(saved.v.data(), n, L.ci, saved.h, saved.w, params[L.param_w].v.data(),
                           params[L.param_b].v.data(), L.co, L.k, L.stride, L.pad, proj.v.data());
          kpar::add_inplace(out.v.data(), proj.v.data(), out.v.size());
        } else {
          kpar::add_inplace(out.v.data(), saved.v.data(), out.v.size());
        }
        break;
      }
    }
  }
}

void Net::backward(const Batch& dlogits, const Workspace& ws, Grads* grads,
                   Batch* dinput, int stop_layer, Batch* dstop) const {
  const int n = ws.input.n;
  const int last = static_cast<int>(layers.size()) - 1;
  Batch dcur = dlogits;
  std::vector<Batch> pending(layers.size());  // skip gradients keyed by save layer

  for (int i = last; i >= 0; --i) {
    if (stop_layer >= 0 && i == stop_layer) {
      // dcur is now the complete gradient w.r.t. acts[stop_layer], except for
      // a pending skip branch when the stop layer is itself a skip_save
      if (layers[i].kind == LayerKind::skip_save && pending[i].n > 0) {
        kpar::add_inplace(dcur.v.data(), pending[i].v.data(), dcur.v.size());
      }
      if (dstop) *dstop = dcur;
      return;
    }
    const LayerSpec& L = layers[i];
    const Batch& in = (i == 0) ? ws.input : ws.acts[i - 1];
    Batch dprev;
    switch (L.kind) {
      case LayerKind::conv: {
        if (grads) {
          kpar::conv2d_bwd_weights(dcur.v.data(), n, L.co, dcur.h, dcur.w, in.v.data(), L.ci,
                                   in.h, in.w, L.k, L.stride, L.pad, (*grads)[L.param_w].data(),
                                   (*grads)[L.param_b].data());
        }
        dprev = Batch(n, in.c, in.h, in.w);
        kpar::conv2d_bwd_input(dcur.v.data(), n, L.co, dcur.h, dcur.w, params[L.param_w].v.data(),
                               L.ci, L.k, L.stride, L.pad, in.h, in.w, dprev.v.data());
        break;
      }
      case LayerKind::relu:
        dprev = Batch(n, in.c, in.h, in.w);
        kpar::relu_bwd(dcur.v.data(), ws.acts[i].v.data(), dprev.v.data(), dprev.v.size());
        break;
      case LayerKind::maxpool2:
        dprev = Batch(n, in.c, in.h, in.w);
        kpar::maxpool2_bwd(dcur.v.data(), n, in.c, in.h, in.w, ws.pool_idx[i].data(), dprev.v.data());
        break;
      case LayerKind::gap:
        dprev = Batch(n, in.c, in.h, in.w);
        kpar::gap_bwd(dcur.v.data(), n, in.c, in.h, in.w, dprev.v.data());
        break;
      case LayerKind::dense: {
        if (grads) {
          kpar::dense_bwd_weights(dcur.v.data(), n, L.out_dim, in.v.data(), L.in_dim,
                                  (*grads)[L.param_w].data(), (*grads)[L.param_b].data());
        }
        dprev = Batch(n, in.c, in.h, in.w);
        kpar::dense_bwd_input(dcur.v.data(), n, L.out_dim, params[L.param_w].v.data(), L.in_dim,
                              dprev.v.data());
        break;
      }
      case LayerKind::skip_save:
        dprev = dcur;
        if (pending[i].n > 0) {
          kpar::add_inplace(dprev.v.data(), pending[i].v.data(), dprev.v.size());
        }
        break;
      case LayerKind::skip_add: {
        const Batch& saved = ws.acts[L.save_idx];
        Batch dsaved;
        if (L.has_proj) {
          if (grads) {
            kpar::conv2d_bwd_weights(dcur.v.data(), n, L.co, dcur.h, dcur.w, saved.v.data(), L.ci,
                                     saved.h, saved.w, L.k, L.stride, L.pad,
                                     (*grads)[L.param_w].data(), (*grads)[L.param_b].data());
          }
          dsaved = Batch(n, saved.c, saved.h, saved.w);
          kpar::conv2d_bwd_input(dcur.v.data(), n, L.co, dcur.h, dcur.w, params[L.param_w].v.data(),
                                 L.ci, L.k, L.stride, L.pad, saved.h, saved.w, dsaved.v.data());
        } else {
          dsaved = dcur;
        }
        pending[L.save_idx] = std::move(dsaved);
        dprev = dcur;  // main path passes straight through the add
        break;
      }
    }
    dcur = std::move(dprev);
  }
  if (dinput) *dinput = std::move(dcur);
}

Grads Net::make_grads() const {
  Grads g(params.size());
  for (size_t i = 0; i < params.size(); ++i) g[i].assign(params[i].size(), 0.0f);
  return g;
}

Net make_smallcnn(Dims in, int num_classes) {
  Net net;
  net.in_dims = in;
  net.num_classes = num_classes;
  auto conv = [](int ci, int co, int k, int stride, int pad) {
    LayerSpec L;
    L.kind = LayerKind::conv;
    L.ci = ci; L.co = co; L.k = k; L.stride = stride; L.pad = pad;
    return L;
  };
  LayerSpec relu; relu.kind = LayerKind::relu;
  LayerSpec pool; pool.kind = LayerKind::maxpool2;
  LayerSpec gapl; gapl.kind = LayerKind::gap;

  net.layers.push_back(conv(in.c, 16, 3, 1, 1));
  net.layers.push_back(relu);
  net.layers.push_back(pool);
  net.layers.push_back(conv(16, 32, 3, 1, 1));
  net.layers.push_back(relu);
  net.layers.push_back(pool);
  net.layers.push_back(conv(32, 64, 3, 1, 1));
  net.layers.push_back(relu);
  net.layers.push_back(conv(64, 64, 3, 1, 1));
  net.layers.push_back(relu);
  net.attention_layer = static_cast<int>(net.layers.size()) - 1;
  net.layers.push_back(gapl);
  net.feature_layer = static_cast<int>(net.layers.size()) - 1;
  LayerSpec fc;
  fc.kind = LayerKind::dense;
  fc.in_dim = 64;
  fc.out_dim = num_classes;
  net.layers.push_back(fc);
  net.finalize();
  return net;
}

Net make_resnet18(Dims in, int num_classes) {
  Net net;
  net.in_dims = in;
  net.num_classes = num_classes;
  LayerSpec relu; relu.kind = LayerKind::relu;
  LayerSpec gapl; gapl.kind = LayerKind::gap;
  auto conv = [](int ci, int co, int stride, float gain) {
    LayerSpec L;
    L.kind = LayerKind::conv;
    L.ci = ci; L.co = co; L.k = 3; L.stride = stride; L.pad = 1;
    L.init_gain = gain;
    return L;
  };
  auto block = [&](int ci, int co, int stride) {
    LayerSpec save; save.kind = LayerKind::skip_save;
    net.layers.push_back(save);
    net.layers.push_back(conv(ci, co, stride, 1.0f));
    net.layers.push_back(relu);
    // damped second conv keeps the residual path stable without norm layers
    net.layers.push_back(conv(co, co, 1, 0.25f));
    LayerSpec add; add.kind = LayerKind::skip_add;
    if (ci != co || stride != 1) {
      add.has_proj = true;
      add.ci = ci; add.co = co; add.k = 1; add.stride = stride; add.pad = 0;
    }
    net.layers.push_back(add);
    net.layers.push_back(relu);
  };

  net.layers.push_back(conv(in.c, 16, 1, 1.0f));
  net.layers.push_back(relu);
  block(16, 16, 1);
  block(16, 16, 1);
  block(16, 32, 2);
  block(32, 32, 1);
  block(32, 64, 2);
  block(64, 64, 1);
  block(64, 64, 1);
  block(64, 64, 1);
  net.attention_layer = static_cast<int>(net.layers.size()) - 1;
  net.layers.push_back(gapl);
  net.feature_layer = static_cast<int>(net.layers.size()) - 1;
  LayerSpec fc;
  fc.kind = LayerKind::dense;
  fc.in_dim = 64;
  fc.out_dim = num_classes;
  net.layers.push_back(fc);
  net.finalize();
  return net;
}

Net make_net(const std::string& arch, Dims in, int num_classes) {
  if (arch == "smallcnn") return make_smallcnn(in, num_classes);
  if (arch == "resnet18") return make_resnet18(in, num_classes);
  throw std::invalid_argument("unknown architecture: " + arch);
}

bool is_known_arch(const std::string& arch) {
  return arch == "smallcnn" || arch == "resnet18";
}

}  // namespace bbsteal
