#include <doctest.h>
#include "relpose/harness.hpp"
