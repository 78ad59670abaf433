#pragma once

#include "topobayes/intensity.hpp"

#include <json.hpp>

#include <string>

namespace topobayes::detail {

nlohmann::json mixture_to_jvalue(const GaussianMixtureIntensity& g);
GaussianMixtureIntensity mixture_from_jvalue(const nlohmann::json& doc);
nlohmann::json parse_json(const std::string& text, const char* what);

} // namespace topobayes::detail
