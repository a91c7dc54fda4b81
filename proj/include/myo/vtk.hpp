// Legacy ASCII VTK unstructured-grid export of a state.
#pragma once

#include <string>

#include "myo/assembly.hpp"

namespace myo {

/// Reference geometry with point fields (displacement, |u|, ux, uy, uz)
/// and cell fields (J, p, activation, fibre direction), averaged over the
/// quadrature points of each cell. Q2 cells are written as VTK type 29,
/// Q1 as type 12.
std::string vtk_document(const Assembler& a, const SystemState& state,
                         const std::string& title = "myosim");
void write_vtk(const Assembler& a, const SystemState& state, const std::string& path,
               const std::string& title = "myosim");

/// VTK point order of cell nodes: vtk_order(kind)[k] is the local node
/// written in position k.
std::vector<int> vtk_order(BasisKind kind);

}  // namespace myo
