#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "silab/dataset.hpp"
#include "silab/grouped_params.hpp"
#include "silab/objective.hpp"
#include "silab/rng.hpp"

namespace silab {

struct SiMlpSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t num_classes = 0;
    // Relative normalization jitter: the per-feature std is
    // sqrt(var_j + bn_epsilon * mean_k var_k), so the guard scales with the
    // layer and normalization stays exactly scale-invariant.
    double bn_epsilon = 1e-5;
    double last_layer_norm = 10.0;
    std::uint64_t seed = 0;

    bool operator==(const SiMlpSpec&) const = default;

    void validate() const {
        if (input_dim == 0) throw std::invalid_argument("SiMlpSpec: input_dim must be positive");
        if (hidden_dims.empty())
            throw std::invalid_argument("SiMlpSpec: at least one hidden layer required");
        for (std::size_t h : hidden_dims)
            if (h == 0) throw std::invalid_argument("SiMlpSpec: zero-width hidden layer");
        if (num_classes < 2) throw std::invalid_argument("SiMlpSpec: need at least two classes");
        if (!(bn_epsilon > 0.0)) throw std::invalid_argument("SiMlpSpec: bn_epsilon must be > 0");
        if (!(last_layer_norm > 0.0))
            throw std::invalid_argument("SiMlpSpec: last_layer_norm must be > 0");
    }
};

// Per-feature batch statistics of one normalization layer, kept around for
// the backward pass and for inspection in tests.
struct BatchStats {
    std::vector<double> mean;
    std::vector<double> var;   // biased (divided by batch size)
    double mean_var = 0.0;     // average of `var` across features
    std::vector<double> sigma; // sqrt(var_j + eps * mean_var)
};

// Multilayer perceptron made fully scale-invariant: hidden linear layers
// without bias, each followed by batch normalization with frozen zero shift
// and unit scale, ReLU, and a frozen output layer whose weight matrix is
// rescaled to a fixed Frobenius norm at construction. The trainable parameters
// are exactly the hidden weight matrices; each is one scale-invariant group.
//
// Batch statistics are used in every pass, including evaluation, so the
// objective seen by the optimizer is the scale-invariant function itself.
class SiMlp : public SIObjective {
public:
    SiMlp(SiMlpSpec spec, std::shared_ptr<const Dataset> data)
        : spec_(std::move(spec)), data_(std::move(data)) {
        spec_.validate();
        if (!data_) throw std::invalid_argument("SiMlp: dataset required");
        if (data_->input_dim != spec_.input_dim)
            throw std::invalid_argument("SiMlp: dataset input_dim mismatch");
        if (data_->num_classes > spec_.num_classes)
            throw std::invalid_argument("SiMlp: dataset has more classes than the model");

        dims_.push_back(spec_.input_dim);
        for (std::size_t h : spec_.hidden_dims) dims_.push_back(h);

        std::vector<GroupSpan> spans;
        std::vector<std::string> names;
        std::size_t offset = 0;
        for (std::size_t l = 0; l < num_hidden(); ++l) {
            const std::size_t len = dims_[l + 1] * dims_[l];
            spans.push_back({offset, len});
            names.push_back("hidden" + std::to_string(l));
            offset += len;
        }
        layout_ = GroupLayout(std::move(spans), std::move(names));

        Rng rng(spec_.seed);
        initial_values_.resize(layout_.dim());
        for (std::size_t l = 0; l < num_hidden(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
            for (double& w : layout_.group(std::span<double>(initial_values_), l))
                w = rng.uniform(-bound, bound);
        }

        const std::size_t feat = dims_.back();
        w_out_.resize(spec_.num_classes * feat);
        const double out_bound = 1.0 / std::sqrt(static_cast<double>(feat));
        for (double& w : w_out_) w = rng.uniform(-out_bound, out_bound);
        scale_in_place(w_out_, spec_.last_layer_norm / norm(w_out_));
        b_out_.resize(spec_.num_classes);
        for (double& b : b_out_) b = rng.uniform(-out_bound, out_bound);
    }

    const SiMlpSpec& spec() const { return spec_; }
    const Dataset& data() const { return *data_; }
    std::size_t num_hidden() const { return spec_.hidden_dims.size(); }
    const GroupLayout& layout() const override { return layout_; }
    std::span<const double> frozen_output_weights() const { return w_out_; }
    std::span<const double> frozen_output_bias() const { return b_out_; }

    // Initial point: hidden weights at their random initialization, sphere
    // radius fixed to the initial norm.
    GroupedParams initial_params() const {
        return GroupedParams(initial_values_, layout_, norm(initial_values_));
    }

    std::size_t train_size() const override { return data_->train_indices.size(); }
    bool has_test_metrics() const override { return !data_->test_indices.empty(); }

    double value(const GroupedParams& params,
                 std::span<const std::size_t> batch = {}) const override {
        Forward fwd;
        run_forward(params, resolve(batch), fwd);
        return mean_cross_entropy(fwd);
    }

    double value_and_gradient(const GroupedParams& params, std::vector<double>& gradient,
                              std::span<const std::size_t> batch = {}) const override {
        Forward fwd;
        const std::vector<std::size_t> idx = resolve(batch);
        run_forward(params, idx, fwd);
        const double loss = mean_cross_entropy(fwd);
        run_backward(params, fwd, gradient);
        return loss;
    }

    // Raw class scores for a batch, row-major (batch x num_classes).
    std::vector<double> logits(const GroupedParams& params,
                               std::span<const std::size_t> batch = {}) const {
        Forward fwd;
        run_forward(params, resolve(batch), fwd);
        return fwd.logits;
    }

    // Normalization statistics of each layer on the given batch.
    std::vector<BatchStats> forward_stats(const GroupedParams& params,
                                          std::span<const std::size_t> batch = {}) const {
        Forward fwd;
        run_forward(params, resolve(batch), fwd);
        return fwd.stats;
    }

    // Post-normalization activations of one layer (batch x width), pre-ReLU.
    std::vector<double> normalized_activations(const GroupedParams& params, std::size_t lyr,
                                               std::span<const std::size_t> batch = {}) const {
        Forward fwd;
        run_forward(params, resolve(batch), fwd);
        return fwd.normalized.at(lyr);
    }

    double test_error(const GroupedParams& params, std::size_t batch_size) const override {
        return classification_error(params, evaluation_order(data_->test_indices), batch_size);
    }

    double classification_error(const GroupedParams& params,
                                std::span<const std::size_t> samples,
                                std::size_t batch_size) const {
        if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::size_t wrong = 0;
        for (const auto& chunk : evaluation_chunks(samples, batch_size)) {
            Forward fwd;
            run_forward(params, chunk, fwd);
            const std::size_t batch = chunk.size();
            for (std::size_t b = 0; b < batch; ++b) {
                const double* row = fwd.logits.data() + b * spec_.num_classes;
                std::size_t best = 0;
                for (std::size_t c = 1; c < spec_.num_classes; ++c)
                    if (row[c] > row[best]) best = c;
                if (static_cast<int>(best) != data_->labels[chunk[b]]) ++wrong;
            }
        }
        return static_cast<double>(wrong) / static_cast<double>(samples.size());
    }

    // Splits `samples` into fixed-order chunks of at most `batch_size`; a
    // trailing single sample is merged into the previous chunk because the
    // normalization statistics need at least two samples.
    static std::vector<std::vector<std::size_t>> evaluation_chunks(
        std::span<const std::size_t> samples, std::size_t batch_size) {
        if (batch_size < 2) throw std::invalid_argument("evaluation_chunks: batch size < 2");
        std::vector<std::vector<std::size_t>> chunks;
        for (std::size_t start = 0; start < samples.size(); start += batch_size) {
            const std::size_t len = std::min(batch_size, samples.size() - start);
            chunks.emplace_back(samples.begin() + start, samples.begin() + start + len);
        }
        if (chunks.size() >= 2 && chunks.back().size() == 1) {
            chunks[chunks.size() - 2].push_back(chunks.back()[0]);
            chunks.pop_back();
        }
        return chunks;
    }

private:
    struct Forward {
        std::size_t batch = 0;
        std::vector<std::size_t> indices;
        std::vector<std::vector<double>> activations;  // input + post-ReLU per layer
        std::vector<std::vector<double>> centered;     // z - mean, per layer
        std::vector<std::vector<double>> normalized;   // centered / sigma, per layer
        std::vector<BatchStats> stats;
        std::vector<double> logits;
        std::vector<double> probs;
    };

    std::vector<std::size_t> resolve(std::span<const std::size_t> batch) const {
        std::vector<std::size_t> idx(batch.begin(), batch.end());
        if (idx.empty()) idx = data_->train_indices;
        if (idx.size() < 2)
            throw std::invalid_argument("SiMlp: batch must contain at least two samples");
        return idx;
    }

    void run_forward(const GroupedParams& params, std::vector<std::size_t> indices,
                     Forward& fwd) const {
        if (params.dim() != layout_.dim())
            throw std::invalid_argument("SiMlp: parameter vector has wrong dimension");
        const std::size_t batch = indices.size();
        fwd.batch = batch;
        fwd.indices = std::move(indices);

        fwd.activations.assign(num_hidden() + 1, {});
        fwd.centered.assign(num_hidden(), {});
        fwd.normalized.assign(num_hidden(), {});
        fwd.stats.assign(num_hidden(), {});

        std::vector<double>& input = fwd.activations[0];
        input.resize(batch * spec_.input_dim);
        for (std::size_t b = 0; b < batch; ++b) {
            const auto row = data_->sample(fwd.indices[b]);
            std::copy(row.begin(), row.end(), input.begin() + b * spec_.input_dim);
        }

        for (std::size_t l = 0; l < num_hidden(); ++l) {
            const std::size_t in_dim = dims_[l];
            const std::size_t out_dim = dims_[l + 1];
            const auto w = layout_.group(std::span<const double>(params.values), l);
            const std::vector<double>& a = fwd.activations[l];

            std::vector<double> z(batch * out_dim);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o) {
                    double s = 0.0;
                    const double* wr = w.data() + o * in_dim;
                    const double* ar = a.data() + b * in_dim;
                    for (std::size_t i = 0; i < in_dim; ++i) s += wr[i] * ar[i];
                    z[b * out_dim + o] = s;
                }

            BatchStats& st = fwd.stats[l];
            st.mean.assign(out_dim, 0.0);
            st.var.assign(out_dim, 0.0);
            st.sigma.assign(out_dim, 0.0);
            const double inv_b = 1.0 / static_cast<double>(batch);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o) st.mean[o] += z[b * out_dim + o];
            for (std::size_t o = 0; o < out_dim; ++o) st.mean[o] *= inv_b;

            std::vector<double>& centered = fwd.centered[l];
            centered.resize(batch * out_dim);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o) {
                    const double d = z[b * out_dim + o] - st.mean[o];
                    centered[b * out_dim + o] = d;
                    st.var[o] += d * d;
                }
            double var_sum = 0.0;
            for (std::size_t o = 0; o < out_dim; ++o) {
                st.var[o] *= inv_b;
                var_sum += st.var[o];
            }
            st.mean_var = var_sum / static_cast<double>(out_dim);
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double s2 = st.var[o] + spec_.bn_epsilon * st.mean_var;
                if (!(s2 > 0.0))
                    throw DegeneratePointError("normalization layer saw zero batch variance");
                st.sigma[o] = std::sqrt(s2);
            }

            std::vector<double>& normalized = fwd.normalized[l];
            normalized.resize(batch * out_dim);
            std::vector<double>& act = fwd.activations[l + 1];
            act.resize(batch * out_dim);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o) {
                    const double xhat = centered[b * out_dim + o] / st.sigma[o];
                    normalized[b * out_dim + o] = xhat;
                    act[b * out_dim + o] = xhat > 0.0 ? xhat : 0.0;
                }
        }

        const std::size_t feat = dims_.back();
        const std::size_t classes = spec_.num_classes;
        const std::vector<double>& h = fwd.activations[num_hidden()];
        fwd.logits.assign(batch * classes, 0.0);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < classes; ++c) {
                double s = b_out_[c];
                const double* wr = w_out_.data() + c * feat;
                const double* hr = h.data() + b * feat;
                for (std::size_t i = 0; i < feat; ++i) s += wr[i] * hr[i];
                fwd.logits[b * classes + c] = s;
            }

        fwd.probs.assign(batch * classes, 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* row = fwd.logits.data() + b * classes;
            double max_logit = row[0];
            for (std::size_t c = 1; c < classes; ++c) max_logit = std::max(max_logit, row[c]);
            double denom = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                const double e = std::exp(row[c] - max_logit);
                fwd.probs[b * classes + c] = e;
                denom += e;
            }
            for (std::size_t c = 0; c < classes; ++c) fwd.probs[b * classes + c] /= denom;
        }
    }

    double mean_cross_entropy(const Forward& fwd) const {
        const std::size_t classes = spec_.num_classes;
        double loss = 0.0;
        for (std::size_t b = 0; b < fwd.batch; ++b) {
            const int label = data_->labels[fwd.indices[b]];
            const double p = fwd.probs[b * classes + static_cast<std::size_t>(label)];
            loss -= std::log(std::max(p, 1e-300));
        }
        return loss / static_cast<double>(fwd.batch);
    }

    void run_backward(const GroupedParams& params, const Forward& fwd,
                      std::vector<double>& gradient) const {
        const std::size_t batch = fwd.batch;
        const std::size_t classes = spec_.num_classes;
        const double inv_b = 1.0 / static_cast<double>(batch);

        gradient.assign(layout_.dim(), 0.0);

        // d loss / d logits = (softmax - onehot) / batch
        std::vector<double> dlogits(batch * classes);
        for (std::size_t b = 0; b < batch; ++b) {
            const int label = data_->labels[fwd.indices[b]];
            for (std::size_t c = 0; c < classes; ++c) {
                double g = fwd.probs[b * classes + c];
                if (static_cast<int>(c) == label) g -= 1.0;
                dlogits[b * classes + c] = g * inv_b;
            }
        }

        const std::size_t feat = dims_.back();
        std::vector<double> dact(batch * feat, 0.0);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < classes; ++c) {
                const double g = dlogits[b * classes + c];
                const double* wr = w_out_.data() + c * feat;
                double* dr = dact.data() + b * feat;
                for (std::size_t i = 0; i < feat; ++i) dr[i] += g * wr[i];
            }

        for (std::size_t l = num_hidden(); l-- > 0;) {
            const std::size_t in_dim = dims_[l];
            const std::size_t out_dim = dims_[l + 1];
            const BatchStats& st = fwd.stats[l];
            const std::vector<double>& centered = fwd.centered[l];
            const std::vector<double>& normalized = fwd.normalized[l];

            // Through ReLU onto the normalized activations.
            std::vector<double> dxhat(batch * out_dim);
            for (std::size_t i = 0; i < batch * out_dim; ++i)
                dxhat[i] = normalized[i] > 0.0 ? dact[i] : 0.0;

            // Through the normalization. With sigma_j^2 = var_j + eps * vbar,
            // every feature's variance feeds every sigma via vbar.
            std::vector<double> s_sum(out_dim, 0.0);  // sum_b dxhat * centered
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o)
                    s_sum[o] += dxhat[b * out_dim + o] * centered[b * out_dim + o];

            double cross = 0.0;  // sum_k s_sum_k / (2 sigma_k^3)
            std::vector<double> inv_sigma(out_dim), inv_sigma3(out_dim);
            for (std::size_t o = 0; o < out_dim; ++o) {
                inv_sigma[o] = 1.0 / st.sigma[o];
                inv_sigma3[o] = inv_sigma[o] * inv_sigma[o] * inv_sigma[o];
                cross += 0.5 * s_sum[o] * inv_sigma3[o];
            }
            const double eps_share = spec_.bn_epsilon / static_cast<double>(out_dim);

            std::vector<double> dvar(out_dim);
            for (std::size_t o = 0; o < out_dim; ++o)
                dvar[o] = -0.5 * s_sum[o] * inv_sigma3[o] - eps_share * cross;

            std::vector<double> dcentered(batch * out_dim);
            std::vector<double> col_mean(out_dim, 0.0);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o) {
                    const std::size_t k = b * out_dim + o;
                    const double v =
                        dxhat[k] * inv_sigma[o] + dvar[o] * 2.0 * centered[k] * inv_b;
                    dcentered[k] = v;
                    col_mean[o] += v;
                }
            for (std::size_t o = 0; o < out_dim; ++o) col_mean[o] *= inv_b;

            std::vector<double> dz(batch * out_dim);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o)
                    dz[b * out_dim + o] = dcentered[b * out_dim + o] - col_mean[o];

            // Weight gradient and, unless at the bottom, the input gradient.
            const std::vector<double>& a = fwd.activations[l];
            auto dw = layout_.group(std::span<double>(gradient), l);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o) {
                    const double g = dz[b * out_dim + o];
                    double* wr = dw.data() + o * in_dim;
                    const double* ar = a.data() + b * in_dim;
                    for (std::size_t i = 0; i < in_dim; ++i) wr[i] += g * ar[i];
                }

            if (l > 0) {
                const auto w = layout_.group(std::span<const double>(params.values), l);
                dact.assign(batch * in_dim, 0.0);
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t o = 0; o < out_dim; ++o) {
                        const double g = dz[b * out_dim + o];
                        const double* wr = w.data() + o * in_dim;
                        double* dr = dact.data() + b * in_dim;
                        for (std::size_t i = 0; i < in_dim; ++i) dr[i] += g * wr[i];
                    }
            }
        }
    }

    SiMlpSpec spec_;
    std::shared_ptr<const Dataset> data_;
    std::vector<std::size_t> dims_;  // input + hidden widths
    GroupLayout layout_;
    std::vector<double> initial_values_;
    std::vector<double> w_out_;  // frozen, num_classes x last hidden width
    std::vector<double> b_out_;  // frozen
};

// Convenience: objective plus its initial sphere point.
inline std::pair<std::shared_ptr<SiMlp>, GroupedParams> build_si_mlp(
    const SiMlpSpec& spec, std::shared_ptr<const Dataset> data) {
    auto net = std::make_shared<SiMlp>(spec, std::move(data));
    GroupedParams params = net->initial_params();
    return {std::move(net), std::move(params)};
}

}  // namespace silab
