#include "app.hpp"

int main(int argc, char **argv) { return qclt::app::main(argc, argv); }
