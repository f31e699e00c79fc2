#pragma once

#include "carleman/weights/certify.hpp"
#include "carleman/weights/construct.hpp"
#include "carleman/weights/local.hpp"
#include "carleman/weights/theta.hpp"
