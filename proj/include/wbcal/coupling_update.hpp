#pragma once

#include "wbcal/coupling.hpp"
#include "wbcal/model.hpp"

namespace wbcal {

struct CouplingUpdate {
    CouplingParams u;
    cmat C;
    bool flagged = false;  // normal matrix needed the eigenvalue floor
};

// Hermitian solve with eigenvalues below 1e-12 * max dropped
cvec solve_hermitian_floor(const cmat& G, const cvec& h, bool& flagged);

// closed-form BS coupling given every other parameter
CouplingUpdate solve_u_bs(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup,
                          const CouplingLayout& lay, double lambda, bool parallel = true);

// closed-form UE coupling; C_t^H x = conj(C_t) x so the solve runs on conj(u_t)
CouplingUpdate solve_u_ue(const MeasurementSet& meas, const EstimatorState& st, const Setup& setup,
                          const CouplingLayout& lay, double lambda, bool parallel = true);

// lambda * ||S u||^2 with u read back from C
double coupling_penalty(const cmat& C, const CouplingLayout& lay, double lambda);

}  // namespace wbcal
