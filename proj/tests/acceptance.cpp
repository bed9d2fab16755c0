#include "relpose/harness.hpp"
int main(){return 0;}
