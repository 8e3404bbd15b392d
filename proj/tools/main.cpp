#include "ebwtpc/cli.hpp"

int main(int argc, char** argv) { return ebwtpc::cli::dispatch(argc, argv); }
