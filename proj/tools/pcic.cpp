#include <pcic/cli/app.hpp>

int main(int argc, char** argv) { return pcic::cli::run(argc, argv); }
