#pragma once

#include <brep/error.hpp>
#include <brep/kernels.hpp>
#include <brep/linalg.hpp>
#include <brep/multikernel.hpp>
#include <brep/norms.hpp>
#include <brep/oracle.hpp>
#include <brep/sparse.hpp>
#include <brep/spline.hpp>
