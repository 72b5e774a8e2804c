// Sequence-to-sequence LSTM autoencoder over fixed-length signal windows,
// trainable either as a plain AE or as a beta-VAE. The encoder reads the
// window through stacked LSTM layers; a linear head maps the final hidden
// state to the latent code (mean and log-variance for the VAE). The
// decoder receives the latent repeated at every timestep through a
// symmetric LSTM stack and a per-timestep linear output head.
//
// Training minimizes  mean_t (x_t - x'_t)^2  +  beta * KL(q(z|x) || N(0,I))
// with a single reparameterized sample per window. Gradients are exact
// analytic BPTT; see tests for the finite-difference checks.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpad/delta.hpp"
#include "bpad/lstm.hpp"
#include "bpad/preprocess.hpp"
#include "bpad/record.hpp"
#include "bpad/tensor.hpp"

namespace bpad {

enum class ModelKind : std::uint8_t { AE, VAE };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelArch {
    std::size_t window_len = 60;
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 64;
    std::size_t latent_dim = 12;
    std::size_t num_layers = 2;
};

struct ModelParams {
    ModelKind kind = ModelKind::VAE;
    double beta = 0.1;
    ModelArch arch;
    std::uint64_t seed = 0;

    std::vector<LstmLayerParams> encoder; // num_layers, hidden_dim each
    Tensor2 mu_w, mu_b;                   // (hidden, latent), (1, latent)
    Tensor2 logvar_w, logvar_b;           // VAE only
    std::vector<LstmLayerParams> decoder; // symmetric to the encoder
    Tensor2 out_w, out_b;                 // (hidden, 1), (1, 1)

    static ModelParams init(ModelKind kind, const ModelArch& arch, double beta,
                            std::uint64_t seed);
    static ModelParams zeros_like(const ModelParams& other);

    // Stable dotted tensor names ("enc.l0.w", "dec.out.w", ...);
    // serialization sorts these lexicographically.
    void visit_params(const std::function<void(const std::string&, Tensor2&)>& fn);
    void visit_params(
        const std::function<void(const std::string&, const Tensor2&)>& fn) const;
    std::vector<Tensor2*> param_list();

    bool equal_bits(const ModelParams& other) const;
};

// Batched latent for a forward pass; tensors are (batch, latent_dim).
// AE mode leaves logvar and eps empty and z == mu.
struct LatentSample {
    Tensor2 mu;
    Tensor2 logvar;
    Tensor2 z;
    Tensor2 eps;
};

struct LossParts {
    double reconstruction = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

// Deterministic encoder map for a batch of windows (batch, W).
LatentSample encode(const ModelParams& params, const Tensor2& windows);

// z = mu + exp(logvar / 2) .* eps, recording eps in the sample.
void reparameterize(const ModelParams& params, LatentSample& latent,
                    const Tensor2& eps);

// Decoder map; z is (batch, latent_dim), result is (batch, W).
Tensor2 decode(const ModelParams& params, const Tensor2& z);

// Loss parts for given input/reconstruction/latent, averaged over the
// batch. recon = mean_t squared error; KL in closed form; AE reports 0 KL.
LossParts elbo_loss(const Tensor2& x, const Tensor2& x_prime,
                    const LatentSample& latent, ModelKind kind, double beta);

// Full forward pass; eps must be non-null for VAE training (it is the
// frozen noise for this step) and may be null for deterministic z = mu.
LossParts model_loss(const ModelParams& params, const Tensor2& x,
                     const Tensor2* eps);

// Forward plus exact analytic gradients, accumulated into `grads`
// (shape mirror of `params`, zeroed by the caller).
LossParts model_loss_grad(const ModelParams& params, const Tensor2& x,
                          const Tensor2* eps, ModelParams& grads);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    double beta = 0.1;
};

struct EpochLoss {
    double reconstruction = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochLoss> trace; // one entry per epoch
};

// Raised when a loss turns non-finite; carries epoch/batch indices.
class TrainingDiverged : public NumericError {
  public:
    TrainingDiverged(std::size_t epoch, std::size_t batch);
    std::size_t epoch;
    std::size_t batch;
};

// Minibatch Adam over the pooled windows for a fixed number of epochs,
// reshuffling every epoch from the run seed. Fully deterministic given
// (pool, kind, arch, cfg).
TrainResult train_model(const WindowBatch& pool, ModelKind kind,
                        const ModelArch& arch, const TrainConfig& cfg);

// Deployment: step-1 windows over the scaled record, z = mu (no sampling),
// per-sample delta = mean over covering windows of |x - x'|.
DeltaTrace reconstruct_record(const Record& scaled_record,
                              const ModelParams& params);

} // namespace bpad
