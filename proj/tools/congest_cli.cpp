// Command-line front end. Subcommands fill in as the library grows; the
// experiment driver owns the real logic.
#include <cstdio>

#include "CLI11.hpp"

int main(int argc, char** argv) {
  CLI::App app{"congest: distributed graph algorithm workbench"};
  app.require_subcommand(0);
  CLI11_PARSE(app, argc, argv);
  std::puts("no subcommand given; try --help");
  return 1;
}
