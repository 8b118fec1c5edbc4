#include "unlock/io.hpp"

int main(int argc, char** argv) { return unlock::cli_main(argc, argv); }
