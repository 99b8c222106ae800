// io.hpp — state files, CSV streams, JSON reports
//
// State file format (text, one coefficient line per lattice point):
//
//     kirchlab-state v1
//     d 1
//     n_max 64
//     kind physical            (or: conjugate)
//     component a              (physical: a,b — conjugate: u,v)
//     <k_1> ... <k_d> <re> <im>
//     ...
//     component b
//     ...
//
// Missing points are zero; unknown points are an error.

#pragma once

#include "kirchlab/dynamics.hpp"
#include "kirchlab/effective.hpp"
#include "kirchlab/spectral.hpp"

#include <iosfwd>
#include <string>
#include <variant>

namespace kirchlab {

using StateVariant = std::variant<PhysicalState, ConjugatePair>;

void write_state(std::ostream& os, const PhysicalState& st);
void write_state(std::ostream& os, const ConjugatePair& pair);
void write_state_file(const std::string& path, const StateVariant& st);

StateVariant read_state(std::istream& is);
StateVariant read_state_file(const std::string& path);

// trajectory CSV: t,H,norm_m1,U_<n>...
void write_physical_csv(std::ostream& os, const Lattice& lat, const Trajectory& traj);
// effective CSV: t,P,S_<n>...,absB_<n>...,argB_<n>...
void write_effective_csv(std::ostream& os, const Lattice& lat, const EffectiveTrajectory& traj);
// triple-margin CSV: t,n_a,n_b,n_l,omega,Omega,theta
void write_triple_csv(std::ostream& os, const Lattice& lat, const EffectiveTrajectory& traj,
                      const TripleSet& triples);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a over bytes, hex string — used for config hashes in manifests
std::string fnv1a_hex(const std::string& bytes);

}  // namespace kirchlab
