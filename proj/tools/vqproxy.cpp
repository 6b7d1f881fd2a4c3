#include "vqp/pipeline.hpp"

int main(int argc, char** argv) { return vqp::pipe::run_cli(argc, argv); }
