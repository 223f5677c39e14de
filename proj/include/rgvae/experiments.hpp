#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgvae/kg_data.hpp"
#include "rgvae/rgvae.hpp"

namespace rgvae {

// "people" in /people/person/spouse can be matched on the leading path
// segment or anywhere in the string.
enum class TypeMatchMode { base_type, substring };

struct RelationFilter {
    std::string key;
    TypeMatchMode mode = TypeMatchMode::base_type;
    std::vector<char> pass;  // per relation id

    static RelationFilter build(const TripleStore& store, const std::string& key,
                                TypeMatchMode mode);
    bool passes(int32_t r) const {
        return r >= 0 && static_cast<size_t>(r) < pass.size() && pass[r];
    }
    size_t pass_count() const;
};

bool entity_matches_type(const TypeCatalog& catalog, int32_t entity,
                         const std::string& key, TypeMatchMode mode);
double type_fraction(const TypeCatalog& catalog, const std::string& key,
                     TypeMatchMode mode);

struct GenerationRun {
    std::vector<Triple> raw;  // every decoded triple, unfiltered
    size_t z_draws = 0;
    size_t kept = 0;          // raw triples passing the relation filter
    bool capped = false;      // attempts cap hit before count_target
};

// Draws z ~ N(0, sigma^2 I), decodes, samples discrete graphs and converts
// them to triples until count_target of them pass the relation filter (or
// the draw cap of max_attempt_factor * count_target is reached).
GenerationRun generate_triples(Rgvae& model, size_t count_target, double sigma,
                               const RelationFilter& filter, Rng& rng,
                               size_t max_attempt_factor = 200);

struct GenerationReport {
    size_t total = 0;   // sampled triples
    size_t kept = 0;    // relation matched the key type
    size_t valid = 0;   // head entity carries the key type
    size_t novel = 0;   // valid and absent from all splits
    double baseline = 0.0;  // fraction of entities carrying the key type
};

GenerationReport validate_generated(const std::vector<Triple>& raw,
                                    const TypeCatalog& catalog, const TripleStore& store,
                                    const std::string& key_type,
                                    TypeMatchMode mode = TypeMatchMode::base_type);

// Linear latent interpolation between two encoded triples (mean latents);
// one decoded-and-discretized triple list per step.
std::vector<std::vector<Triple>> interpolate_between(Rgvae& model, const Triple& a,
                                                     const Triple& b, size_t steps);

// Traversal values of the 95% confidence interval: -1.96 + j * s with
// s = 3.92 / (steps - 1).
std::vector<double> ci_grid(size_t steps);

// Per-dimension traversal of the 95% confidence interval [-1.96, 1.96],
// all other dimensions held at the anchor's mean latent. result[dim][step].
std::vector<std::vector<std::vector<Triple>>> interpolate_dims(Rgvae& model,
                                                               const Triple& anchor,
                                                               size_t steps);

// One TSV row per checkpoint tensor: name, weight|bias, then the raw values.
void export_param_histograms(const std::string& checkpoint_path,
                             const std::string& out_tsv_path);

}  // namespace rgvae
