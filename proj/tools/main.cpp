#include "bridgeintent/cli.hpp"

int main(int argc, char** argv) { return bridgeintent::cli::main(argc, argv); }
