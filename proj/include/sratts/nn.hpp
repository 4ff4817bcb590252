#pragma once

// Dense layers with explicit forward caches and backward passes. Every
// backward accumulates parameter gradients into a ParameterSet that mirrors
// the value set, and returns the gradient w.r.t. the layer input.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace sratts {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::RowVectorXd;

class Rng;

enum class ParamGroup { kEncoder, kDecoder, kDurationPredictor };

const char* to_string(ParamGroup group);

struct Parameter {
  std::string name;
  ParamGroup group;
  Mat value;
};

class ParameterSet {
 public:
  std::size_t add(std::string name, ParamGroup group, Eigen::Index rows,
                  Eigen::Index cols);

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return params_[i]; }
  const Parameter& at(std::size_t i) const { return params_[i]; }
  Mat& operator[](std::size_t i) { return params_[i].value; }
  const Mat& operator[](std::size_t i) const { return params_[i].value; }

  // npos when absent.
  std::size_t find(const std::string& name) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ParameterSet zeros_like() const;
  void set_zero();
  std::size_t scalar_count() const;
  // Same names, shapes and values, compared bitwise.
  bool identical(const ParameterSet& other) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace nn {

// y = x W + b with W: in x out, b: 1 x out.
struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;
  Eigen::Index in = 0;
  Eigen::Index out = 0;

  static Linear make(ParameterSet& p, const std::string& name,
                     ParamGroup group, Eigen::Index in, Eigen::Index out);
  std::size_t parameter_count() const { return in * out + out; }

  Mat forward(const ParameterSet& p, const Mat& x) const;
  Mat backward(const ParameterSet& p, ParameterSet& g, const Mat& x,
               const Mat& dy) const;
};

// Row-wise layer normalization over the feature axis.
struct LayerNorm {
  std::size_t gamma = 0;
  std::size_t beta = 0;
  Eigen::Index dim = 0;
  static constexpr double kEps = 1e-5;

  struct Cache {
    Mat normalized;
    Eigen::VectorXd inv_std;
  };

  static LayerNorm make(ParameterSet& p, const std::string& name,
                        ParamGroup group, Eigen::Index dim);
  std::size_t parameter_count() const { return 2 * dim; }

  Mat forward(const ParameterSet& p, const Mat& x, Cache* cache) const;
  Mat backward(const ParameterSet& p, ParameterSet& g, const Cache& cache,
               const Mat& dy) const;
};

// 1-D convolution over the time (row) axis with "same" zero padding and an
// odd kernel. Weight layout: (kernel * in) x out, tap-major, so that the
// im2col row for time t is [x[t-h], ..., x[t+h]].
struct Conv1d {
  std::size_t weight = 0;
  std::size_t bias = 0;
  Eigen::Index in = 0;
  Eigen::Index out = 0;
  int kernel = 1;

  static Conv1d make(ParameterSet& p, const std::string& name,
                     ParamGroup group, Eigen::Index in, Eigen::Index out,
                     int kernel);
  std::size_t parameter_count() const { return kernel * in * out + out; }

  Mat im2col(const Mat& x) const;
  Mat forward(const ParameterSet& p, const Mat& x, Mat* cols_cache) const;
  Mat backward(const ParameterSet& p, ParameterSet& g, const Mat& cols,
               const Mat& dy) const;
};

Mat relu(const Mat& x);
// dy masked by (y > 0) where y is the relu output.
Mat relu_backward(const Mat& y, const Mat& dy);

// Scaled dot-product attention, heads x d_head internal width. Queries come
// from xq (T x d_q), keys and values from xkv (S x d_kv).
struct Attention {
  Linear query;
  Linear key;
  Linear value;
  Linear output;
  int heads = 1;
  Eigen::Index head_dim = 0;

  struct Cache {
    Mat xq;
    Mat xkv;
    Mat q;
    Mat k;
    Mat v;
    std::vector<Mat> probs;  // per head, T x S
    Mat context;             // T x heads*head_dim, before the output map
  };

  static Attention make(ParameterSet& p, const std::string& name,
                        ParamGroup group, Eigen::Index query_dim,
                        Eigen::Index kv_dim, Eigen::Index out_dim, int heads,
                        Eigen::Index head_dim);
  std::size_t parameter_count() const;

  // Context before the output projection (T x heads*head_dim).
  Mat context(const ParameterSet& p, const Mat& xq, const Mat& xkv,
              Cache* cache) const;
  Mat forward(const ParameterSet& p, const Mat& xq, const Mat& xkv,
              Cache* cache) const;
  // Returns {d xq, d xkv}.
  std::pair<Mat, Mat> backward(const ParameterSet& p, ParameterSet& g,
                               const Cache& cache, const Mat& dy) const;
};

// Post-norm feed-forward transformer block:
//   h = LN(x + SelfAttn(x)); y = LN(h + Conv(ReLU(Conv(h)))).
struct FftBlock {
  Attention attention;
  LayerNorm attention_norm;
  Conv1d ff_in;
  Conv1d ff_out;
  LayerNorm ff_norm;

  struct Cache {
    Attention::Cache attention;
    LayerNorm::Cache attention_norm;
    Mat ff_in_cols;
    Mat hidden;  // relu output
    Mat ff_out_cols;
    LayerNorm::Cache ff_norm;
  };

  static FftBlock make(ParameterSet& p, const std::string& name,
                       ParamGroup group, Eigen::Index d_model,
                       Eigen::Index d_ff, int heads, Eigen::Index head_dim,
                       int kernel);
  std::size_t parameter_count() const;

  Mat forward(const ParameterSet& p, const Mat& x, Cache* cache) const;
  Mat backward(const ParameterSet& p, ParameterSet& g, const Cache& cache,
               const Mat& dy) const;
};

// Fixed sinusoidal table, rows = positions.
Mat sinusoidal_positions(Eigen::Index positions, Eigen::Index dim);

// Fan-in uniform init U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight and bias.
void init_uniform(Mat& m, double bound, Rng& rng);

}  // namespace nn
}  // namespace sratts
