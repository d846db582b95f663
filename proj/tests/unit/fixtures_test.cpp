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

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <unistd.h>

#include "camrefine/backend.hpp"

namespace camrefine::testing {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// The committed tree must be exactly what the generator produces, so the
// goldens were computed from the same inputs the tests load.
TEST(FixtureTreeTest, RegeneratesByteIdentical) {
  const fs::path out = fs::temp_directory_path() / ("camrefine_fx_" + std::to_string(::getpid()));
  fs::remove_all(out);
  WriteFixtureTree(out);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), out);
    ASSERT_TRUE(fs::exists(FixtureRoot() / rel)) << rel;
    EXPECT_EQ(Slurp(e.path()), Slurp(FixtureRoot() / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 20);
  fs::remove_all(out);
}

TEST(FixtureModelTest, ExportedModelsLoad) {
  const ClassifierHandle h = LoadFixture(FixtureRoot() / "models", "two_blob");
  EXPECT_EQ(h.class_count(), 2);
  EXPECT_EQ(h.feature_unit_count(), 4);
  const ClassifierHandle z = LoadFixture(FixtureRoot() / "models", "zero_weights");
  const ResponseMap cam = ComputeCam(Forward(z, Checkerboard16()).features, z.class_weights(), 1);
  for (float v : cam.data()) EXPECT_EQ(v, 0.f);
}

TEST(FixtureModelTest, ManifestRoundTrips) {
  const ModelManifest m = FixtureManifest(2);
  EXPECT_EQ(ModelManifest::Parse(m.ToText()).ToText(), m.ToText());
  EXPECT_EQ(ModelManifest::FromFile(FixtureRoot() / "models" / "two_blob.manifest").ToText(),
            m.ToText());
}

}  // namespace
}  // namespace camrefine::testing
