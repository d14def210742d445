/// @file ncpoly.hpp
/// @brief umbrella header
#pragma once

#include <ncpoly/assembly.hpp>
#include <ncpoly/convergence.hpp>
#include <ncpoly/element.hpp>
#include <ncpoly/fe_space.hpp>
#include <ncpoly/manufactured.hpp>
#include <ncpoly/mesh.hpp>
#include <ncpoly/quadrature.hpp>
#include <ncpoly/reference.hpp>
#include <ncpoly/simplex_mesh.hpp>
#include <ncpoly/sparse.hpp>
#include <ncpoly/types.hpp>
