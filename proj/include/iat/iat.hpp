#pragma once

#include "iat/error.hpp"
#include "iat/family.hpp"
#include "iat/field.hpp"
#include "iat/field_io.hpp"
#include "iat/kernel.hpp"
#include "iat/levels.hpp"
#include "iat/pai.hpp"
#include "iat/poisson.hpp"
#include "iat/transform.hpp"
