// Copyright 2026-present the annforge project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "annforge/dataset.hpp"
#include "annforge/errors.hpp"

// Writes a seeded synthetic fvecs file; companion utility for desk-scale
// experiments with the annforge CLI.
int main(int argc, char** argv) {
  CLI::App app{"annforge-gen: write seeded synthetic vectors (fvecs)"};
  size_t n = 1000;
  size_t dim = 32;
  uint64_t seed = 0;
  std::string metric = "euclidean";
  std::string out;
  app.add_option("--n", n, "Vector count")->capture_default_str();
  app.add_option("--dim", dim, "Dimensions")->capture_default_str();
  app.add_option("--seed", seed, "RNG seed")->required();
  app.add_option("--metric", metric, "euclidean|angular")->capture_default_str();
  app.add_option("--out", out, "Output path (fvecs)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    annforge::Metric m;
    if (metric == "euclidean") {
      m = annforge::Metric::kEuclidean;
    } else if (metric == "angular") {
      m = annforge::Metric::kAngular;
    } else {
      std::cerr << "error: unknown metric '" << metric << "'\n";
      return 2;
    }
    const annforge::VectorSet set = annforge::generate_synthetic(n, dim, seed, m);
    annforge::save_fvecs(set, out);
    std::cout << "wrote " << set.count << " x " << set.dim << " vectors to " << out
              << "\n";
    return 0;
  } catch (const annforge::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
