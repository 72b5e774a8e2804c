#include "bpad/model.hpp"

#include <algorithm>
#include <cmath>

#include "bpad/adam.hpp"
#include "bpad/rng.hpp"

namespace bpad {

const char* model_kind_name(ModelKind kind) {
    return kind == ModelKind::AE ? "AE" : "VAE";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "AE" || name == "ae") return ModelKind::AE;
    if (name == "VAE" || name == "vae") return ModelKind::VAE;
    throw std::invalid_argument("unknown model kind '" + name + "'");
}

ModelParams ModelParams::init(ModelKind kind, const ModelArch& arch,
                              double beta, std::uint64_t seed) {
    ModelParams p;
    p.kind = kind;
    p.beta = beta;
    p.arch = arch;
    p.seed = seed;

    Rng rng = Rng(seed).derive(rng_stream::kWeightInit);
    auto head = [&rng](std::size_t fan_in, std::size_t fan_out) {
        Tensor2 w(fan_in, fan_out);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : w.data) v = (2.0 * rng.next_uniform() - 1.0) * bound;
        return w;
    };

    for (std::size_t l = 0; l < arch.num_layers; ++l) {
        const std::size_t in = l == 0 ? arch.input_dim : arch.hidden_dim;
        p.encoder.push_back(LstmLayerParams::init(in, arch.hidden_dim, rng));
    }
    p.mu_w = head(arch.hidden_dim, arch.latent_dim);
    p.mu_b = Tensor2(1, arch.latent_dim);
    if (kind == ModelKind::VAE) {
        p.logvar_w = head(arch.hidden_dim, arch.latent_dim);
        p.logvar_b = Tensor2(1, arch.latent_dim);
    }
    for (std::size_t l = 0; l < arch.num_layers; ++l) {
        const std::size_t in = l == 0 ? arch.latent_dim : arch.hidden_dim;
        p.decoder.push_back(LstmLayerParams::init(in, arch.hidden_dim, rng));
    }
    p.out_w = head(arch.hidden_dim, 1);
    p.out_b = Tensor2(1, 1);
    return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
    ModelParams p = other;
    p.visit_params([](const std::string&, Tensor2& t) { t.fill(0.0); });
    return p;
}

void ModelParams::visit_params(
    const std::function<void(const std::string&, Tensor2&)>& fn) {
    for (std::size_t l = 0; l < encoder.size(); ++l) {
        const std::string prefix = "enc.l" + std::to_string(l) + ".";
        encoder[l].visit([&](const std::string& name, Tensor2& t) {
            fn(prefix + name, t);
        });
    }
    fn("enc.mu.w", mu_w);
    fn("enc.mu.b", mu_b);
    if (kind == ModelKind::VAE) {
        fn("enc.logvar.w", logvar_w);
        fn("enc.logvar.b", logvar_b);
    }
    for (std::size_t l = 0; l < decoder.size(); ++l) {
        const std::string prefix = "dec.l" + std::to_string(l) + ".";
        decoder[l].visit([&](const std::string& name, Tensor2& t) {
            fn(prefix + name, t);
        });
    }
    fn("dec.out.w", out_w);
    fn("dec.out.b", out_b);
}

void ModelParams::visit_params(
    const std::function<void(const std::string&, const Tensor2&)>& fn) const {
    const_cast<ModelParams*>(this)->visit_params(
        [&](const std::string& name, Tensor2& t) {
            fn(name, static_cast<const Tensor2&>(t));
        });
}

std::vector<Tensor2*> ModelParams::param_list() {
    std::vector<Tensor2*> out;
    visit_params([&](const std::string&, Tensor2& t) { out.push_back(&t); });
    return out;
}

bool ModelParams::equal_bits(const ModelParams& other) const {
    if (kind != other.kind || beta != other.beta ||
        arch.window_len != other.arch.window_len ||
        arch.hidden_dim != other.arch.hidden_dim ||
        arch.latent_dim != other.arch.latent_dim ||
        arch.num_layers != other.arch.num_layers || seed != other.seed) {
        return false;
    }
    bool equal = true;
    std::vector<const Tensor2*> mine;
    visit_params([&](const std::string&, const Tensor2& t) { mine.push_back(&t); });
    std::size_t idx = 0;
    other.visit_params([&](const std::string&, const Tensor2& t) {
        if (idx >= mine.size() || !mine[idx]->same_shape(t) ||
            mine[idx]->data != t.data) {
            equal = false;
        }
        ++idx;
    });
    return equal && idx == mine.size();
}

namespace {

// Everything the backward pass needs from one forward evaluation.
struct ForwardPass {
    std::vector<Tensor2> enc_inputs;               // W x (B, input_dim)
    std::vector<LstmLayerCache> enc_caches;
    LatentSample latent;
    std::vector<Tensor2> dec_inputs;               // W x (B, latent)
    std::vector<LstmLayerCache> dec_caches;
    Tensor2 x_prime;                               // (B, W)
    LossParts parts;
};

std::vector<Tensor2> slice_columns(const Tensor2& x) {
    std::vector<Tensor2> inputs(x.cols);
    for (std::size_t t = 0; t < x.cols; ++t) {
        Tensor2 col(x.rows, 1);
        for (std::size_t b = 0; b < x.rows; ++b) col.data[b] = x(b, t);
        inputs[t] = std::move(col);
    }
    return inputs;
}

void run_encoder(const ModelParams& params, const Tensor2& windows,
                 ForwardPass& fp) {
    if (windows.cols != params.arch.window_len) {
        throw std::invalid_argument("encode: window length mismatch");
    }
    fp.enc_inputs = slice_columns(windows);
    const std::vector<Tensor2>* layer_in = &fp.enc_inputs;
    for (const auto& layer : params.encoder) {
        fp.enc_caches.push_back(lstm_layer_forward(layer, *layer_in));
        layer_in = &fp.enc_caches.back().hidden;
    }
    const Tensor2& h_final = fp.enc_caches.back().hidden.back();

    fp.latent.mu = Tensor2(windows.rows, params.arch.latent_dim);
    matmul(h_final, params.mu_w, fp.latent.mu);
    add_bias_rows(fp.latent.mu, params.mu_b);
    if (params.kind == ModelKind::VAE) {
        fp.latent.logvar = Tensor2(windows.rows, params.arch.latent_dim);
        matmul(h_final, params.logvar_w, fp.latent.logvar);
        add_bias_rows(fp.latent.logvar, params.logvar_b);
    }
}

void run_decoder(const ModelParams& params, const Tensor2& z, ForwardPass& fp) {
    if (z.cols != params.arch.latent_dim) {
        throw std::invalid_argument("decode: latent dimension mismatch");
    }
    const std::size_t steps = params.arch.window_len;
    fp.dec_inputs.assign(steps, z);
    const std::vector<Tensor2>* layer_in = &fp.dec_inputs;
    for (const auto& layer : params.decoder) {
        fp.dec_caches.push_back(lstm_layer_forward(layer, *layer_in));
        layer_in = &fp.dec_caches.back().hidden;
    }
    fp.x_prime = Tensor2(z.rows, steps);
    Tensor2 out_col(z.rows, 1);
    for (std::size_t t = 0; t < steps; ++t) {
        matmul(fp.dec_caches.back().hidden[t], params.out_w, out_col);
        add_bias_rows(out_col, params.out_b);
        for (std::size_t b = 0; b < z.rows; ++b) {
            fp.x_prime(b, t) = out_col.data[b];
        }
    }
}

ForwardPass forward(const ModelParams& params, const Tensor2& x,
                    const Tensor2* eps) {
    ForwardPass fp;
    run_encoder(params, x, fp);
    if (params.kind == ModelKind::VAE && eps != nullptr) {
        reparameterize(params, fp.latent, *eps);
    } else {
        fp.latent.z = fp.latent.mu;
    }
    run_decoder(params, fp.latent.z, fp);
    fp.parts = elbo_loss(x, fp.x_prime, fp.latent, params.kind, params.beta);
    return fp;
}

} // namespace

LatentSample encode(const ModelParams& params, const Tensor2& windows) {
    ForwardPass fp;
    run_encoder(params, windows, fp);
    fp.latent.z = fp.latent.mu;
    return std::move(fp.latent);
}

void reparameterize(const ModelParams& params, LatentSample& latent,
                    const Tensor2& eps) {
    if (params.kind != ModelKind::VAE) {
        throw std::logic_error("reparameterize: model is not a VAE");
    }
    if (!eps.same_shape(latent.mu)) {
        throw std::invalid_argument("reparameterize: eps shape mismatch");
    }
    latent.eps = eps;
    latent.z = latent.mu;
    for (std::size_t n = 0; n < latent.z.count(); ++n) {
        latent.z.data[n] += std::exp(0.5 * latent.logvar.data[n]) * eps.data[n];
    }
}

Tensor2 decode(const ModelParams& params, const Tensor2& z) {
    ForwardPass fp;
    run_decoder(params, z, fp);
    return std::move(fp.x_prime);
}

LossParts elbo_loss(const Tensor2& x, const Tensor2& x_prime,
                    const LatentSample& latent, ModelKind kind, double beta) {
    if (!x.same_shape(x_prime)) {
        throw std::invalid_argument("elbo_loss: shape mismatch");
    }
    const std::size_t batch = x.rows;
    const std::size_t window = x.cols;
    LossParts parts;
    double sq = 0.0;
    for (std::size_t n = 0; n < x.count(); ++n) {
        const double d = x.data[n] - x_prime.data[n];
        sq += d * d;
    }
    parts.reconstruction =
        sq / (static_cast<double>(window) * static_cast<double>(batch));
    if (kind == ModelKind::VAE) {
        double kl = 0.0;
        for (std::size_t n = 0; n < latent.mu.count(); ++n) {
            const double mu = latent.mu.data[n];
            const double lv = latent.logvar.data[n];
            kl += mu * mu + std::exp(lv) - 1.0 - lv;
        }
        parts.kl = 0.5 * kl / static_cast<double>(batch);
    }
    parts.total = parts.reconstruction + beta * parts.kl;
    return parts;
}

LossParts model_loss(const ModelParams& params, const Tensor2& x,
                     const Tensor2* eps) {
    return forward(params, x, eps).parts;
}

LossParts model_loss_grad(const ModelParams& params, const Tensor2& x,
                          const Tensor2* eps, ModelParams& grads) {
    ForwardPass fp = forward(params, x, eps);
    const std::size_t batch = x.rows;
    const std::size_t steps = params.arch.window_len;
    const std::size_t hidden = params.arch.hidden_dim;
    const std::size_t latent_dim = params.arch.latent_dim;
    const double inv_bw =
        1.0 / (static_cast<double>(batch) * static_cast<double>(steps));

    // Output head and decoder stack.
    std::vector<Tensor2> d_dec_top(steps);
    Tensor2 dxp_col(batch, 1);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < batch; ++b) {
            dxp_col.data[b] = 2.0 * (fp.x_prime(b, t) - x(b, t)) * inv_bw;
        }
        d_dec_top[t] = Tensor2(batch, hidden);
        matmul_bt(dxp_col, params.out_w, d_dec_top[t]);
        matmul_at(fp.dec_caches.back().hidden[t], dxp_col, grads.out_w, true);
        for (std::size_t b = 0; b < batch; ++b) {
            grads.out_b.data[0] += dxp_col.data[b];
        }
    }
    std::vector<Tensor2> d_flow = std::move(d_dec_top);
    for (std::size_t l = params.decoder.size(); l-- > 0;) {
        const std::vector<Tensor2>& layer_in =
            l == 0 ? fp.dec_inputs : fp.dec_caches[l - 1].hidden;
        d_flow = lstm_layer_backward(params.decoder[l], layer_in,
                                     fp.dec_caches[l], d_flow,
                                     grads.decoder[l]);
    }

    // The latent feeds every decoder timestep; gradients sum over t.
    Tensor2 dz(batch, latent_dim);
    for (const Tensor2& dt : d_flow) {
        for (std::size_t n = 0; n < dz.count(); ++n) dz.data[n] += dt.data[n];
    }

    Tensor2 dmu = dz;
    Tensor2 dlogvar;
    const double inv_b = 1.0 / static_cast<double>(batch);
    if (params.kind == ModelKind::VAE) {
        dlogvar = Tensor2(batch, latent_dim);
        for (std::size_t n = 0; n < dz.count(); ++n) {
            const double lv = fp.latent.logvar.data[n];
            const double sigma = std::exp(0.5 * lv);
            dlogvar.data[n] = dz.data[n] * 0.5 * sigma * fp.latent.eps.data[n];
            // KL term: d/dmu = mu, d/dlogvar = (exp(logvar) - 1) / 2.
            dmu.data[n] += params.beta * fp.latent.mu.data[n] * inv_b;
            dlogvar.data[n] +=
                params.beta * 0.5 * (std::exp(lv) - 1.0) * inv_b;
        }
    }

    const Tensor2& h_final = fp.enc_caches.back().hidden.back();
    Tensor2 dh_final(batch, hidden);
    matmul_bt(dmu, params.mu_w, dh_final);
    matmul_at(h_final, dmu, grads.mu_w, true);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < latent_dim; ++j) {
            grads.mu_b.data[j] += dmu(b, j);
        }
    }
    if (params.kind == ModelKind::VAE) {
        matmul_bt(dlogvar, params.logvar_w, dh_final, true);
        matmul_at(h_final, dlogvar, grads.logvar_w, true);
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t j = 0; j < latent_dim; ++j) {
                grads.logvar_b.data[j] += dlogvar(b, j);
            }
        }
    }

    // Encoder stack: upstream gradient arrives only at the final timestep.
    std::vector<Tensor2> d_enc(steps, Tensor2(batch, hidden));
    d_enc[steps - 1] = std::move(dh_final);
    for (std::size_t l = params.encoder.size(); l-- > 0;) {
        const std::vector<Tensor2>& layer_in =
            l == 0 ? fp.enc_inputs : fp.enc_caches[l - 1].hidden;
        d_enc = lstm_layer_backward(params.encoder[l], layer_in,
                                    fp.enc_caches[l], d_enc, grads.encoder[l]);
    }
    return fp.parts;
}

TrainingDiverged::TrainingDiverged(std::size_t epoch_, std::size_t batch_)
    : NumericError("training diverged: non-finite loss at epoch " +
                   std::to_string(epoch_) + ", batch " +
                   std::to_string(batch_)),
      epoch(epoch_), batch(batch_) {}

TrainResult train_model(const WindowBatch& pool, ModelKind kind,
                        const ModelArch& arch, const TrainConfig& cfg) {
    if (pool.size() == 0) {
        throw std::invalid_argument("train_model: empty window pool");
    }
    if (pool.window_len != arch.window_len) {
        throw std::invalid_argument("train_model: pool window length differs "
                                    "from model window length");
    }
    ModelParams params = ModelParams::init(kind, arch, cfg.beta, cfg.seed);
    std::vector<Tensor2*> tensors = params.param_list();
    std::vector<const Tensor2*> tensors_const(tensors.begin(), tensors.end());

    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    AdamState adam = AdamState::init(adam_cfg, tensors_const);

    ModelParams grads = ModelParams::zeros_like(params);
    std::vector<Tensor2*> grad_tensors = grads.param_list();
    std::vector<const Tensor2*> grad_const(grad_tensors.begin(),
                                           grad_tensors.end());

    Rng shuffle_rng = Rng(cfg.seed).derive(rng_stream::kTrainShuffle);
    Rng noise_rng = Rng(cfg.seed).derive(rng_stream::kLatentNoise);

    const std::size_t n = pool.size();
    const std::size_t w = pool.window_len;
    std::vector<std::size_t> order(n);
    TrainResult result;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);
        }

        EpochLoss epoch_loss;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            const std::size_t size = std::min(cfg.batch_size, n - begin);
            Tensor2 x(size, w);
            for (std::size_t r = 0; r < size; ++r) {
                const auto src = pool.window(order[begin + r]);
                std::copy(src.begin(), src.end(), x.row(r));
            }
            Tensor2 eps;
            if (kind == ModelKind::VAE) {
                eps = Tensor2(size, arch.latent_dim);
                for (double& v : eps.data) v = noise_rng.next_gaussian();
            }

            for (Tensor2* g : grad_tensors) g->fill(0.0);
            const LossParts parts = model_loss_grad(
                params, x, kind == ModelKind::VAE ? &eps : nullptr, grads);
            if (!std::isfinite(parts.total)) {
                throw TrainingDiverged(epoch, batch_index);
            }
            adam_step(tensors, grad_const, adam);

            const double weight = static_cast<double>(size) / static_cast<double>(n);
            epoch_loss.reconstruction += parts.reconstruction * weight;
            epoch_loss.kl += parts.kl * weight;
            epoch_loss.total += parts.total * weight;
            ++batch_index;
        }
        result.trace.push_back(epoch_loss);
    }
    result.params = std::move(params);
    return result;
}

DeltaTrace reconstruct_record(const Record& scaled_record,
                              const ModelParams& params) {
    const std::size_t w = params.arch.window_len;
    const std::size_t n = scaled_record.size();
    DeltaTrace trace;
    trace.resize(n);

    const WindowBatch windows = make_windows(scaled_record, w, 1);
    if (windows.size() == 0) {
        return trace;
    }

    std::vector<double> delta_sum(n, 0.0);
    std::vector<double> recon_sum(n, 0.0);
    std::vector<std::size_t> cover(n, 0);

    constexpr std::size_t kChunk = 256;
    for (std::size_t begin = 0; begin < windows.size(); begin += kChunk) {
        const std::size_t size = std::min(kChunk, windows.size() - begin);
        Tensor2 x(size, w);
        for (std::size_t r = 0; r < size; ++r) {
            const auto src = windows.window(begin + r);
            std::copy(src.begin(), src.end(), x.row(r));
        }
        const LatentSample latent = encode(params, x);
        const Tensor2 x_prime = decode(params, latent.z);
        for (std::size_t r = 0; r < size; ++r) {
            const std::size_t start = windows.origins[begin + r].start;
            for (std::size_t k = 0; k < w; ++k) {
                const std::size_t pos = start + k;
                delta_sum[pos] += std::abs(x(r, k) - x_prime(r, k));
                recon_sum[pos] += x_prime(r, k);
                ++cover[pos];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (cover[i] == 0) continue;
        const double count = static_cast<double>(cover[i]);
        trace.delta[i] = delta_sum[i] / count;
        trace.reconstruction[i] = recon_sum[i] / count;
        trace.defined[i] = 1;
    }
    return trace;
}

} // namespace bpad
