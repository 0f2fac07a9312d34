#include "reckon/cli/app.hpp"

int main(int argc, char** argv) {
    return reckon::cli::run(argc, argv);
}
