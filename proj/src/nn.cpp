#include "sratts/nn.hpp"

#include <cmath>
#include <cstring>

#include "sratts/error.hpp"
#include "sratts/random.hpp"

namespace sratts {

const char* to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kDecoder: return "decoder";
    case ParamGroup::kDurationPredictor: return "duration_predictor";
  }
  return "unknown";
}

std::size_t ParameterSet::add(std::string name, ParamGroup group,
                              Eigen::Index rows, Eigen::Index cols) {
  if (index_.count(name) != 0) {
    throw Error(ErrorKind::kConfiguration, "duplicate parameter " + name);
  }
  const std::size_t idx = params_.size();
  index_.emplace(name, idx);
  params_.push_back({std::move(name), group, Mat::Zero(rows, cols)});
  return idx;
}

std::size_t ParameterSet::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? npos : it->second;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& p : params_) {
    out.add(p.name, p.group, p.value.rows(), p.value.cols());
  }
  return out;
}

void ParameterSet::set_zero() {
  for (auto& p : params_) p.value.setZero();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool ParameterSet::identical(const ParameterSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
    if (std::memcmp(a.value.data(), b.value.data(),
                    sizeof(double) * a.value.size()) != 0) {
      return false;
    }
  }
  return true;
}

namespace nn {

namespace {

void require_cols(const Mat& x, Eigen::Index cols, const char* what) {
  if (x.cols() != cols) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(what) + ": expected " + std::to_string(cols) +
                    " input features, got " + std::to_string(x.cols()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Linear Linear::make(ParameterSet& p, const std::string& name, ParamGroup group,
                    Eigen::Index in, Eigen::Index out) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = p.add(name + ".weight", group, in, out);
  l.bias = p.add(name + ".bias", group, 1, out);
  return l;
}

Mat Linear::forward(const ParameterSet& p, const Mat& x) const {
  require_cols(x, in, "linear");
  Mat y = x * p[weight];
  y.rowwise() += p[bias].row(0);
  return y;
}

Mat Linear::backward(const ParameterSet& p, ParameterSet& g, const Mat& x,
                     const Mat& dy) const {
  g[weight].noalias() += x.transpose() * dy;
  g[bias] += dy.colwise().sum();
  return dy * p[weight].transpose();
}

// ---------------------------------------------------------------------------

LayerNorm LayerNorm::make(ParameterSet& p, const std::string& name,
                          ParamGroup group, Eigen::Index dim) {
  LayerNorm ln;
  ln.dim = dim;
  ln.gamma = p.add(name + ".gamma", group, 1, dim);
  ln.beta = p.add(name + ".beta", group, 1, dim);
  p[ln.gamma].setOnes();
  return ln;
}

Mat LayerNorm::forward(const ParameterSet& p, const Mat& x,
                       Cache* cache) const {
  require_cols(x, dim, "layer norm");
  const Eigen::Index rows = x.rows();
  Mat normalized(rows, dim);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + kEps);
    normalized.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  Mat y = normalized.array().rowwise() * p[gamma].row(0).array();
  y.rowwise() += p[beta].row(0);
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Mat LayerNorm::backward(const ParameterSet& p, ParameterSet& g,
                        const Cache& cache, const Mat& dy) const {
  const Mat& xhat = cache.normalized;
  g[gamma] += (dy.array() * xhat.array()).colwise().sum().matrix();
  g[beta] += dy.colwise().sum();
  Mat dxhat = dy.array().rowwise() * p[gamma].row(0).array();
  Mat dx(dy.rows(), dim);
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).mean();
    const double mean_dx = dxhat.row(r).dot(xhat.row(r)) / static_cast<double>(dim);
    dx.row(r) = cache.inv_std(r) *
                (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
  }
  return dx;
}

// ---------------------------------------------------------------------------

Conv1d Conv1d::make(ParameterSet& p, const std::string& name, ParamGroup group,
                    Eigen::Index in, Eigen::Index out, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorKind::kConfiguration, "conv kernel must be odd");
  }
  Conv1d c;
  c.in = in;
  c.out = out;
  c.kernel = kernel;
  c.weight = p.add(name + ".weight", group, kernel * in, out);
  c.bias = p.add(name + ".bias", group, 1, out);
  return c;
}

Mat Conv1d::im2col(const Mat& x) const {
  const Eigen::Index t_len = x.rows();
  const int half = kernel / 2;
  Mat cols = Mat::Zero(t_len, kernel * in);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = t + k - half;
      if (src >= 0 && src < t_len) {
        cols.block(t, k * in, 1, in) = x.row(src);
      }
    }
  }
  return cols;
}

Mat Conv1d::forward(const ParameterSet& p, const Mat& x,
                    Mat* cols_cache) const {
  require_cols(x, in, "conv1d");
  Mat cols = im2col(x);
  Mat y = cols * p[weight];
  y.rowwise() += p[bias].row(0);
  if (cols_cache != nullptr) *cols_cache = std::move(cols);
  return y;
}

Mat Conv1d::backward(const ParameterSet& p, ParameterSet& g, const Mat& cols,
                     const Mat& dy) const {
  g[weight].noalias() += cols.transpose() * dy;
  g[bias] += dy.colwise().sum();
  const Mat dcols = dy * p[weight].transpose();
  const Eigen::Index t_len = dy.rows();
  const int half = kernel / 2;
  Mat dx = Mat::Zero(t_len, in);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = t + k - half;
      if (src >= 0 && src < t_len) {
        dx.row(src) += dcols.block(t, k * in, 1, in);
      }
    }
  }
  return dx;
}

Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

Mat relu_backward(const Mat& y, const Mat& dy) {
  return (y.array() > 0.0).select(dy, 0.0);
}

// ---------------------------------------------------------------------------

Attention Attention::make(ParameterSet& p, const std::string& name,
                          ParamGroup group, Eigen::Index query_dim,
                          Eigen::Index kv_dim, Eigen::Index out_dim, int heads,
                          Eigen::Index head_dim) {
  if (heads < 1 || head_dim < 1) {
    throw Error(ErrorKind::kConfiguration, "attention needs heads, head_dim >= 1");
  }
  Attention a;
  a.heads = heads;
  a.head_dim = head_dim;
  const Eigen::Index inner = heads * head_dim;
  a.query = Linear::make(p, name + ".query", group, query_dim, inner);
  a.key = Linear::make(p, name + ".key", group, kv_dim, inner);
  a.value = Linear::make(p, name + ".value", group, kv_dim, inner);
  a.output = Linear::make(p, name + ".output", group, inner, out_dim);
  return a;
}

std::size_t Attention::parameter_count() const {
  return query.parameter_count() + key.parameter_count() +
         value.parameter_count() + output.parameter_count();
}

Mat Attention::context(const ParameterSet& p, const Mat& xq, const Mat& xkv,
                       Cache* cache) const {
  Mat q = query.forward(p, xq);
  Mat k = key.forward(p, xkv);
  Mat v = value.forward(p, xkv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Mat ctx(xq.rows(), heads * head_dim);
  std::vector<Mat> probs;
  for (int h = 0; h < heads; ++h) {
    const auto qh = q.middleCols(h * head_dim, head_dim);
    const auto kh = k.middleCols(h * head_dim, head_dim);
    const auto vh = v.middleCols(h * head_dim, head_dim);
    Mat scores = (qh * kh.transpose()) * scale;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const double mx = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - mx).exp();
      scores.row(r) /= scores.row(r).sum();
    }
    ctx.middleCols(h * head_dim, head_dim) = scores * vh;
    if (cache != nullptr) probs.push_back(std::move(scores));
  }
  if (cache != nullptr) {
    cache->xq = xq;
    cache->xkv = xkv;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->context = ctx;
  }
  return ctx;
}

Mat Attention::forward(const ParameterSet& p, const Mat& xq, const Mat& xkv,
                       Cache* cache) const {
  return output.forward(p, context(p, xq, xkv, cache));
}

std::pair<Mat, Mat> Attention::backward(const ParameterSet& p, ParameterSet& g,
                                        const Cache& c, const Mat& dy) const {
  const Mat dctx = output.backward(p, g, c.context, dy);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Mat dq(c.q.rows(), c.q.cols());
  Mat dk(c.k.rows(), c.k.cols());
  Mat dv(c.v.rows(), c.v.cols());
  for (int h = 0; h < heads; ++h) {
    const Mat& a = c.probs[h];
    const auto dctx_h = dctx.middleCols(h * head_dim, head_dim);
    const auto qh = c.q.middleCols(h * head_dim, head_dim);
    const auto kh = c.k.middleCols(h * head_dim, head_dim);
    const auto vh = c.v.middleCols(h * head_dim, head_dim);
    const Mat da = dctx_h * vh.transpose();
    dv.middleCols(h * head_dim, head_dim) = a.transpose() * dctx_h;
    Mat ds = a;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double inner = a.row(r).dot(da.row(r));
      ds.row(r) = a.row(r).array() * (da.row(r).array() - inner);
    }
    ds *= scale;
    dq.middleCols(h * head_dim, head_dim) = ds * kh;
    dk.middleCols(h * head_dim, head_dim) = ds.transpose() * qh;
  }
  Mat dxq = query.backward(p, g, c.xq, dq);
  Mat dxkv = key.backward(p, g, c.xkv, dk);
  dxkv += value.backward(p, g, c.xkv, dv);
  return {std::move(dxq), std::move(dxkv)};
}

// ---------------------------------------------------------------------------

FftBlock FftBlock::make(ParameterSet& p, const std::string& name,
                        ParamGroup group, Eigen::Index d_model,
                        Eigen::Index d_ff, int heads, Eigen::Index head_dim,
                        int kernel) {
  FftBlock b;
  b.attention = Attention::make(p, name + ".attention", group, d_model,
                                d_model, d_model, heads, head_dim);
  b.attention_norm = LayerNorm::make(p, name + ".attention_norm", group, d_model);
  b.ff_in = Conv1d::make(p, name + ".ff_in", group, d_model, d_ff, kernel);
  b.ff_out = Conv1d::make(p, name + ".ff_out", group, d_ff, d_model, kernel);
  b.ff_norm = LayerNorm::make(p, name + ".ff_norm", group, d_model);
  return b;
}

std::size_t FftBlock::parameter_count() const {
  return attention.parameter_count() + attention_norm.parameter_count() +
         ff_in.parameter_count() + ff_out.parameter_count() +
         ff_norm.parameter_count();
}

Mat FftBlock::forward(const ParameterSet& p, const Mat& x, Cache* c) const {
  Mat att = attention.forward(p, x, x, c ? &c->attention : nullptr);
  Mat h = attention_norm.forward(p, x + att, c ? &c->attention_norm : nullptr);
  Mat hidden = relu(ff_in.forward(p, h, c ? &c->ff_in_cols : nullptr));
  Mat ff = ff_out.forward(p, hidden, c ? &c->ff_out_cols : nullptr);
  if (c != nullptr) c->hidden = hidden;
  return ff_norm.forward(p, h + ff, c ? &c->ff_norm : nullptr);
}

Mat FftBlock::backward(const ParameterSet& p, ParameterSet& g, const Cache& c,
                       const Mat& dy) const {
  const Mat dsum2 = ff_norm.backward(p, g, c.ff_norm, dy);
  Mat dhidden = ff_out.backward(p, g, c.ff_out_cols, dsum2);
  dhidden = relu_backward(c.hidden, dhidden);
  Mat dh = dsum2 + ff_in.backward(p, g, c.ff_in_cols, dhidden);
  const Mat dsum1 = attention_norm.backward(p, g, c.attention_norm, dh);
  auto [dxq, dxkv] = attention.backward(p, g, c.attention, dsum1);
  return dsum1 + dxq + dxkv;
}

// ---------------------------------------------------------------------------

Mat sinusoidal_positions(Eigen::Index positions, Eigen::Index dim) {
  Mat pe(positions, dim);
  for (Eigen::Index pos = 0; pos < positions; ++pos) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / dim;
      const double angle = pos / std::pow(10000.0, exponent);
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

void init_uniform(Mat& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.uniform(-bound, bound);
  }
}

}  // namespace nn
}  // namespace sratts
