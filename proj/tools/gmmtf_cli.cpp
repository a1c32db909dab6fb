// Command-line front end; talks to the library only through the C API.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gmmtf/gmmtf.h"

namespace {

int report(gmmtf_status s) {
  std::fprintf(stderr, "error (%s): %s\n", gmmtf_status_name(s), gmmtf_last_error());
  return 1;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  gmmtf_string_free(s);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian mixture estimation and compiled transformer constructions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gmmtf_version());

  // sample
  auto* sample = app.add_subcommand("sample", "Emit sampled tasks as JSON");
  int s_d = 2;
  std::vector<int> s_k{2, 3, 4, 5};
  int s_nmax = 128;
  int s_count = 1;
  std::uint64_t s_seed = 0;
  bool s_aniso = false;
  std::string s_out;
  sample->add_option("--d", s_d, "Dimension")->capture_default_str();
  sample->add_option("--k", s_k, "Admissible component counts")->delimiter(',')->capture_default_str();
  sample->add_option("--n-max", s_nmax, "N is uniform on [n_max/2, n_max]")->capture_default_str();
  sample->add_option("--count", s_count, "Number of tasks")->capture_default_str();
  sample->add_option("--seed", s_seed, "Seed")->capture_default_str();
  sample->add_flag("--anisotropic", s_aniso, "Per-dimension scales");
  sample->add_option("--out", s_out, "Output file (default stdout)");

  // solve
  auto* solve = app.add_subcommand("solve", "Sample one task and estimate it");
  std::string v_solver = "em";
  int v_d = 2, v_k = 2, v_n = 128;
  std::uint64_t v_seed = 0;
  std::string v_init = "kmeanspp";
  std::string v_task;
  solve->add_option("--solver", v_solver, "em | spectral | tf-em")
      ->check(CLI::IsMember({"em", "spectral", "tf-em"}))
      ->capture_default_str();
  solve->add_option("--d", v_d, "Dimension")->capture_default_str();
  solve->add_option("--k", v_k, "Components")->capture_default_str();
  solve->add_option("--n", v_n, "Samples")->capture_default_str();
  solve->add_option("--seed", v_seed, "Seed")->capture_default_str();
  solve->add_option("--init", v_init, "random | kmeanspp | oracle")
      ->check(CLI::IsMember({"random", "kmeanspp", "oracle"}))
      ->capture_default_str();
  solve->add_option("--task", v_task, "Read the task from a JSON file instead of sampling");

  // bench
  auto* bench = app.add_subcommand("bench", "Run the benchmark suites");
  std::string b_config, b_out = "bench_out", b_format = "csv";
  bench->add_option("--config", b_config, "Flat key = value config file");
  bench->add_option("--out", b_out, "Output directory")->capture_default_str();
  bench->add_option("--format", b_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // verify-construction
  auto* verify = app.add_subcommand("verify-construction",
                                    "Check the compiled transformers against their algorithms");
  double c_delta = 1e-4;
  int c_layers = 10, c_d0 = 4, c_k0 = 4;
  std::uint64_t c_seed = 0;
  verify->add_option("--delta", c_delta, "Approximator tolerance")->capture_default_str();
  verify->add_option("--L", c_layers, "Unrolled iterations")->capture_default_str();
  verify->add_option("--d0", c_d0, "Dimension capacity")->capture_default_str();
  verify->add_option("--k0", c_k0, "Component capacity")->capture_default_str();
  verify->add_option("--seed", c_seed, "Seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*sample) {
    char* text = nullptr;
    const gmmtf_status s = gmmtf_sample_tasks_json(s_d, s_k.data(), s_k.size(), s_nmax,
                                                   s_aniso, s_seed, s_count, &text);
    if (s != GMMTF_OK) return report(s);
    const std::string body = take(text);
    if (s_out.empty()) {
      std::cout << body;
    } else {
      std::ofstream out(s_out);
      out << body;
      if (!out) {
        std::fprintf(stderr, "error: cannot write %s\n", s_out.c_str());
        return 1;
      }
    }
    return 0;
  }

  if (*solve) {
    gmmtf_task* task = nullptr;
    gmmtf_status s;
    if (!v_task.empty()) {
      std::ifstream in(v_task);
      if (!in) {
        std::fprintf(stderr, "error: cannot read %s\n", v_task.c_str());
        return 1;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      s = gmmtf_task_from_json(ss.str().c_str(), &task);
    } else {
      s = gmmtf_task_sample(v_d, v_k, v_n, v_seed, 0, &task);
    }
    if (s != GMMTF_OK) return report(s);
    gmmtf_params* est = nullptr;
    s = gmmtf_solve(task, v_solver.c_str(), v_init.c_str(), v_seed, &est);
    if (s != GMMTF_OK) {
      gmmtf_task_free(task);
      return report(s);
    }
    double l2 = NAN, acc = NAN, ll = NAN;
    s = gmmtf_evaluate(task, est, &l2, &acc, &ll);
    char* params = nullptr;
    if (s == GMMTF_OK) s = gmmtf_params_to_json(est, &params);
    gmmtf_params_free(est);
    gmmtf_task_free(task);
    if (s != GMMTF_OK) return report(s);
    std::printf("{\"solver\": \"%s\", \"params\": %s, \"l2_error\": %.10g, "
                "\"accuracy\": %.10g, \"log_likelihood\": %.10g}\n",
                v_solver.c_str(), take(params).c_str(), l2, acc, ll);
    return 0;
  }

  if (*bench) {
    std::string text;
    if (!b_config.empty()) {
      std::ifstream in(b_config);
      if (!in) {
        std::fprintf(stderr, "error: cannot read %s\n", b_config.c_str());
        return 1;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    char* summary = nullptr;
    const gmmtf_status s = gmmtf_bench_run(b_config.empty() ? nullptr : text.c_str(),
                                           b_out.c_str(), b_format.c_str(), &summary);
    if (s != GMMTF_OK) return report(s);
    take(summary);
    std::printf("wrote %s/report.%s and %s/summary.json\n", b_out.c_str(), b_format.c_str(),
                b_out.c_str());
    return 0;
  }

  if (*verify) {
    int passed = 0;
    char* text = nullptr;
    const gmmtf_status s =
        gmmtf_verify_constructions(c_delta, c_layers, c_d0, c_k0, c_seed, &passed, &text);
    if (s != GMMTF_OK) return report(s);
    std::cout << take(text) << '\n';
    return passed ? 0 : 2;
  }
  return 0;
}
