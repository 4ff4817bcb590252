#pragma once

// Plain-loop reference implementations of the model's forward pass, written
// against parameter names only. They share no code with the library layers.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sratts/model.hpp"

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows to_rows(const sratts::Mat& m) {
  Rows r(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  }
  return r;
}

class Reference {
 public:
  explicit Reference(const sratts::FastSpeechModel& model)
      : model_(model), cfg_(model.config()) {}

  Rows param(const std::string& name) const {
    const auto& ps = model_.parameters();
    const std::size_t i = ps.find(name);
    if (i == sratts::ParameterSet::npos) throw std::runtime_error("no parameter " + name);
    return to_rows(ps[i]);
  }

  Rows linear(const Rows& x, const std::string& name) const {
    const Rows w = param(name + ".weight");
    const Rows b = param(name + ".bias");
    Rows y(x.size(), std::vector<double>(b[0].size()));
    for (std::size_t t = 0; t < x.size(); ++t) {
      for (std::size_t o = 0; o < b[0].size(); ++o) {
        double s = b[0][o];
        for (std::size_t i = 0; i < x[t].size(); ++i) s += x[t][i] * w[i][o];
        y[t][o] = s;
      }
    }
    return y;
  }

  Rows layer_norm(const Rows& x, const std::string& name) const {
    const Rows g = param(name + ".gamma");
    const Rows b = param(name + ".beta");
    Rows y = x;
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double n = static_cast<double>(x[t].size());
      double mean = 0.0;
      for (double v : x[t]) mean += v;
      mean /= n;
      double var = 0.0;
      for (double v : x[t]) var += (v - mean) * (v - mean);
      var /= n;
      for (std::size_t i = 0; i < x[t].size(); ++i) {
        y[t][i] = (x[t][i] - mean) / std::sqrt(var + 1e-5) * g[0][i] + b[0][i];
      }
    }
    return y;
  }

  Rows conv(const Rows& x, const std::string& name, int kernel) const {
    const Rows w = param(name + ".weight");
    const Rows b = param(name + ".bias");
    const long t_len = static_cast<long>(x.size());
    const std::size_t in = x[0].size();
    const int half = kernel / 2;
    Rows y(x.size(), std::vector<double>(b[0].size()));
    for (long t = 0; t < t_len; ++t) {
      for (std::size_t o = 0; o < b[0].size(); ++o) {
        double s = b[0][o];
        for (int j = 0; j < kernel; ++j) {
          const long src = t + j - half;
          if (src < 0 || src >= t_len) continue;
          for (std::size_t i = 0; i < in; ++i) s += x[src][i] * w[j * in + i][o];
        }
        y[t][o] = s;
      }
    }
    return y;
  }

  static Rows relu(Rows x) {
    for (auto& r : x) {
      for (double& v : r) v = v > 0.0 ? v : 0.0;
    }
    return x;
  }

  static Rows add(Rows a, const Rows& b) {
    for (std::size_t t = 0; t < a.size(); ++t) {
      for (std::size_t i = 0; i < a[t].size(); ++i) a[t][i] += b[t][i];
    }
    return a;
  }

  // Context before the output projection.
  Rows attention_context(const Rows& xq, const Rows& xkv, const std::string& name,
                         int heads, int head_dim) const {
    const Rows q = linear(xq, name + ".query");
    const Rows k = linear(xkv, name + ".key");
    const Rows v = linear(xkv, name + ".value");
    Rows ctx(xq.size(), std::vector<double>(heads * head_dim, 0.0));
    for (int h = 0; h < heads; ++h) {
      for (std::size_t t = 0; t < xq.size(); ++t) {
        std::vector<double> score(xkv.size());
        double top = -1e300;
        for (std::size_t s = 0; s < xkv.size(); ++s) {
          double dot = 0.0;
          for (int d = 0; d < head_dim; ++d) dot += q[t][h * head_dim + d] * k[s][h * head_dim + d];
          score[s] = dot / std::sqrt(static_cast<double>(head_dim));
          top = std::max(top, score[s]);
        }
        double z = 0.0;
        for (double& sc : score) z += (sc = std::exp(sc - top));
        for (std::size_t s = 0; s < xkv.size(); ++s) {
          for (int d = 0; d < head_dim; ++d) ctx[t][h * head_dim + d] += score[s] / z * v[s][h * head_dim + d];
        }
      }
    }
    return ctx;
  }

  Rows attention(const Rows& xq, const Rows& xkv, const std::string& name, int heads,
                 int head_dim) const {
    return linear(attention_context(xq, xkv, name, heads, head_dim), name + ".output");
  }

  Rows block(const Rows& x, const std::string& name) const {
    const Rows h = layer_norm(
        add(x, attention(x, x, name + ".attention", cfg_.n_heads, cfg_.d_attn)),
        name + ".attention_norm");
    const Rows f = conv(relu(conv(h, name + ".ff_in", cfg_.ffn_kernel)), name + ".ff_out",
                        cfg_.ffn_kernel);
    return layer_norm(add(h, f), name + ".ff_norm");
  }

  static double position(long pos, long i, long dim) {
    const long pair = i - (i % 2);
    const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(pair) / dim);
    return i % 2 == 0 ? std::sin(angle) : std::cos(angle);
  }

  Rows encode(const std::vector<sratts::TokenId>& tokens, int speaker) const {
    const Rows emb = param("encoder.token_embedding");
    const Rows spk = param("encoder.speaker_embedding");
    Rows x(tokens.size(), std::vector<double>(cfg_.d_model));
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      for (int i = 0; i < cfg_.d_model; ++i) {
        x[t][i] = emb[tokens[t]][i] + position(static_cast<long>(t), i, cfg_.d_model);
      }
    }
    for (int l = 0; l < cfg_.n_encoder_layers; ++l) x = block(x, "encoder.layers." + std::to_string(l));
    for (auto& r : x) {
      for (int i = 0; i < cfg_.d_model; ++i) r[i] += spk[speaker][i];
    }
    return x;
  }

  Rows condition(const Rows& x, double sr) const {
    const Rows srf = linear(Rows{{sratts::sr_feature(sr)}}, "duration.sr.projection");
    return add(x, attention(x, srf, "duration.sr.attention", 1, cfg_.d_attn));
  }

  Rows duration_post(const Rows& enc, std::optional<double> sr) const {
    Rows x = linear(enc, "duration.input");
    if (cfg_.variant == sratts::DurationPredictorVariant::kSraB) x = condition(x, *sr);
    x = layer_norm(relu(conv(x, "duration.conv1", cfg_.duration_kernel)), "duration.norm1");
    x = layer_norm(relu(conv(x, "duration.conv2", cfg_.duration_kernel)), "duration.norm2");
    return x;
  }

  std::vector<double> log_durations(const Rows& enc, std::optional<double> sr) const {
    Rows x = duration_post(enc, sr);
    if (cfg_.variant == sratts::DurationPredictorVariant::kSraE) x = condition(x, *sr);
    const Rows out = linear(x, "duration.output");
    std::vector<double> r;
    for (const auto& row : out) r.push_back(row[0]);
    return r;
  }

  Rows decode(const Rows& frames) const {
    Rows x = frames;
    for (std::size_t t = 0; t < x.size(); ++t) {
      for (int i = 0; i < cfg_.d_model; ++i) x[t][i] += position(static_cast<long>(t), i, cfg_.d_model);
    }
    for (int l = 0; l < cfg_.n_decoder_layers; ++l) x = block(x, "decoder.layers." + std::to_string(l));
    return linear(x, "decoder.mel_head");
  }

 private:
  const sratts::FastSpeechModel& model_;
  sratts::ModelConfig cfg_;
};

inline double max_abs_diff(const sratts::Mat& a, const Rows& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
  }
  return worst;
}

}  // namespace oracle
