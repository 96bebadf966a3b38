#include "ampiifd/pipeline.hpp"

int main(int argc, char** argv) { return ampiifd::run_cli(argc, argv); }
