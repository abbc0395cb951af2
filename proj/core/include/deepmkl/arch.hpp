#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "deepmkl/kernels.hpp"

namespace deepmkl {

/// Layered multiple-kernel architecture: `layers` levels, each holding
/// `sets` weighted combinations of the same `kernels` base kernels.
///
/// Weights are stored flat, layer-major. Every layer is an
/// out_sets x in_sets x m block:
///   layer 0                  sets x 1 x m     (inputs are base Grams on raw vectors)
///   middle layers            sets x sets x m  (inputs are compositions of every previous set)
///   last layer (layers > 1)  1 x sets x m
/// With a single layer the `sets` outputs are averaged into the final kernel.
class ArchConfig {
public:
    struct LayerShape {
        int out_sets;
        int in_sets;
        std::size_t offset;
        std::size_t size() const;
    };

    struct WeightId {
        int layer;
        int out;
        int in;
        int kernel;
    };

    /// Every weight starts at 1/m.
    ArchConfig(int layers, int sets, std::vector<KernelSpec> specs);

    int layers() const { return layers_; }
    int sets() const { return sets_; }
    int kernels() const { return static_cast<int>(specs_.size()); }
    const std::vector<KernelSpec>& specs() const { return specs_; }

    std::size_t num_weights() const { return theta_.size(); }
    std::span<const double> theta() const { return theta_; }
    std::span<double> theta() { return theta_; }
    /// Throws InputError on size mismatch or a negative entry.
    void set_theta(std::vector<double> theta);

    LayerShape layer_shape(int layer) const;
    std::size_t weight_index(int layer, int out, int in, int kernel) const;
    WeightId weight_id(std::size_t flat) const;
    double weight(int layer, int out, int in, int kernel) const {
        return theta_[weight_index(layer, out, in, kernel)];
    }

    /// Multiplies every weight of one layer by `factor`.
    void scale_layer(int layer, double factor);

    void validate() const;

private:
    int layers_;
    int sets_;
    std::vector<KernelSpec> specs_;
    std::vector<double> theta_;
};

void to_json(nlohmann::json& j, const ArchConfig& config);
/// Reads {layers, sets, kernels, theta_init: "uniform"} and an optional explicit "theta".
ArchConfig arch_from_json(const nlohmann::json& j);

/// Everything the forward pass computed, kept for gradient evaluation.
struct LayerCache {
    /// Per output set.
    std::vector<Eigen::MatrixXd> raw;
    std::vector<Eigen::MatrixXd> normalized;
    /// Indexed in * m + k: the matrix multiplied by weight (out, in, k).
    /// Base Grams on layer 0, compose_eval of the previous normalized set after that.
    std::vector<Eigen::MatrixXd> inputs;
    /// compose_deriv counterparts of `inputs`; empty on layer 0.
    std::vector<Eigen::MatrixXd> input_derivs;
};

struct GramStack {
    std::vector<LayerCache> layers;
    /// Mean of the layer-0 set Grams; only used when layers == 1 and sets > 1.
    Eigen::MatrixXd averaged;
    Eigen::MatrixXd final_gram;

    Eigen::Index size() const { return final_gram.rows(); }
};

/// Unit-hypersphere normalization R_ij / sqrt(R_ii R_jj); diagonal set to 1.
/// Throws NumericError if a diagonal entry is below 1e-300 or non-finite.
Eigen::MatrixXd normalize_gram(const Eigen::MatrixXd& raw);

/// Gram matrix of one base kernel over the rows of X.
Eigen::MatrixXd base_gram(const KernelSpec& spec, const Eigen::MatrixXd& X);

GramStack forward(const ArchConfig& config, const Eigen::MatrixXd& X);

/// Final kernel between the rows of Z and the rows of X, shape Z.rows() x X.rows().
/// Each point's self-similarity is pushed through the same stack for normalization.
Eigen::MatrixXd forward_cross(const ArchConfig& config, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z);

/// dK_final / d theta_w for every flat weight index w.
std::vector<Eigen::MatrixXd> grad_theta(const ArchConfig& config, const GramStack& stack);

}  // namespace deepmkl
