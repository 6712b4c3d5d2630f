#include <serpent/cli.hpp>

int main(int argc, char **argv) { return serpent::cli::run(argc, argv); }
