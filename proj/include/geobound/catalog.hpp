#pragma once

#include "geobound/metric.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace geobound {

struct CatalogFlags {
    bool nonpositive_sectional = false;
    bool einstein = false;
    bool symmetric_space = false;
};

using Oracle = std::function<double(const std::vector<double>&)>;

struct CatalogEntry {
    std::string name;
    std::string description;
    MetricSpec spec;
    CatalogFlags flags;
    Vector diagonal;  // unit "diag" direction at the base point
    std::map<std::string, Oracle> oracles;
};

struct CatalogInfo {
    std::string name;
    std::string description;
    std::map<std::string, double> default_params;
};

/// Names, descriptions and default parameters of every built-in metric.
std::vector<CatalogInfo> list_metrics();

/// Throws UnknownMetric for an unknown name and BadParams for an unknown key,
/// a non-integral dimension, or an out-of-range value.
CatalogEntry get(const std::string& name, const std::map<std::string, double>& params = {});

/// Throws UnknownQuantity when the entry has no such oracle.
double oracle_eval(const CatalogEntry& entry, const std::string& quantity, const std::vector<double>& args = {});

/// Diagonal metric with g_aa = prod_k F_ak(p_k), each factor one of
/// exp(rate p), sinh^2 p, sin^2 p. Analytic first and second derivatives.
struct DiagonalFactor {
    enum class Kind { Exp, SinhSq, SinSq };
    int coord = 0;
    Kind kind = Kind::Exp;
    double rate = 0.0;  // Exp only
};

MetricSpec separable_diagonal_metric(std::string name, int dim,
                                     std::vector<std::vector<DiagonalFactor>> factors, Vector base_point);

}  // namespace geobound
