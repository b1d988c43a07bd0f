#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace semaigc {

// Diagonal-covariance Gaussian mixture. Zero variances are allowed (point
// mass components); the observation noise of the diffusion process keeps all
// posteriors proper.
struct GaussianComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> var;  // per-dimension variance, same length as mean
};

struct Mixture {
    std::vector<GaussianComponent> components;

    int dim() const { return components.empty() ? 0 : static_cast<int>(components[0].mean.size()); }

    void validate() const {
        if (components.empty()) {
            throw std::invalid_argument("Mixture: no components");
        }
        double total = 0.0;
        const std::size_t d = components[0].mean.size();
        for (const auto& c : components) {
            if (c.mean.size() != d || c.var.size() != d) {
                throw std::invalid_argument("Mixture: inconsistent dimensions");
            }
            if (!(c.weight > 0.0)) {
                throw std::invalid_argument("Mixture: weights must be positive");
            }
            for (double v : c.var) {
                if (!(v >= 0.0)) {
                    throw std::invalid_argument("Mixture: variances must be >= 0");
                }
            }
            total += c.weight;
        }
        if (std::fabs(total - 1.0) > 1e-12) {
            throw std::invalid_argument("Mixture: weights must sum to 1");
        }
    }

    // Second moment per dimension averaged over components; the expected
    // signal power of clean latents.
    double mean_square() const {
        double acc = 0.0;
        for (const auto& c : components) {
            double comp = 0.0;
            for (std::size_t i = 0; i < c.mean.size(); ++i) {
                comp += c.mean[i] * c.mean[i] + c.var[i];
            }
            acc += c.weight * comp / static_cast<double>(c.mean.size());
        }
        return acc;
    }
};

// Per-label mixtures: the data model behind guidance-conditioned generation.
struct MixtureSpec {
    std::map<int, Mixture> by_label;

    int dim() const { return by_label.empty() ? 0 : by_label.begin()->second.dim(); }

    const Mixture& for_label(int label) const {
        const auto it = by_label.find(label);
        if (it == by_label.end()) {
            throw std::out_of_range("MixtureSpec: unknown label " + std::to_string(label));
        }
        return it->second;
    }

    void validate() const {
        if (by_label.empty()) {
            throw std::invalid_argument("MixtureSpec: empty");
        }
        const int d = dim();
        for (const auto& [label, mix] : by_label) {
            mix.validate();
            if (mix.dim() != d) {
                throw std::invalid_argument("MixtureSpec: dimension mismatch across labels");
            }
        }
    }
};

inline nlohmann::json mixture_to_json(const MixtureSpec& spec) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [label, mix] : spec.by_label) {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& c : mix.components) {
            comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"var", c.var}});
        }
        j[std::to_string(label)] = comps;
    }
    return j;
}

inline MixtureSpec mixture_from_json(const nlohmann::json& j) {
    MixtureSpec spec;
    for (const auto& [key, comps] : j.items()) {
        Mixture mix;
        for (const auto& c : comps) {
            GaussianComponent gc;
            gc.weight = c.at("weight").get<double>();
            gc.mean = c.at("mean").get<std::vector<double>>();
            gc.var = c.at("var").get<std::vector<double>>();
            mix.components.push_back(std::move(gc));
        }
        spec.by_label[std::stoi(key)] = std::move(mix);
    }
    spec.validate();
    return spec;
}

}  // namespace semaigc
