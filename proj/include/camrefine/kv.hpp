/* Copyright 2026 The camrefine Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CAMREFINE_KV_HPP_
#define CAMREFINE_KV_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace camrefine::kv {

// Plain `key = value` text used by manifests, sidecars and reports. Blank
// lines and `#` comments are skipped; duplicate keys are rejected.
std::map<std::string, std::string> Parse(const std::string& text,
                                         const std::string& origin);
std::map<std::string, std::string> ReadFile(const std::filesystem::path& path);

std::string Format(const std::vector<std::pair<std::string, std::string>>& entries);

std::string Trim(const std::string& s);
std::vector<std::string> SplitWhitespace(const std::string& s);

// Shortest decimal form that reads back to the same float/double.
std::string FormatFloat(double value);
std::string FormatFloat(float value);

double ParseDouble(const std::string& text, const std::string& key);
long long ParseInt(const std::string& text, const std::string& key);

}  // namespace camrefine::kv

#endif  // CAMREFINE_KV_HPP_
