#include "obsbandit/cli.hpp"

int main(int argc, char** argv) {
  return obsbandit::cli::run_main(argc, argv);
}
