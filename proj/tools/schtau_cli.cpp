#include "schtau/experiment.hpp"

int main(int argc, char** argv) { return schtau::cli::main(argc, argv); }
