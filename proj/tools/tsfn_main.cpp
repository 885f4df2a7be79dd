#include "tsfn/cli.hpp"

int main(int argc, char** argv) { return tsfn::cli::dispatch(argc, argv); }
