#include "gazeeg/cli.hpp"

int main(int argc, char** argv) { return gazeeg::run(argc, argv); }
