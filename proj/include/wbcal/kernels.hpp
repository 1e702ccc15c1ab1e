#pragma once

// Hot loops in two flavours: an OpenMP version used by the estimator and a plain serial
// reference kept for tests and benchmarks. Both produce bit-identical results.

#include "wbcal/ongrid.hpp"

#include <functional>

namespace wbcal {

void set_threads(int n);
int max_threads();

namespace kernels {

// score[col] = |d_col^H r| / ||d_col||  (0 for zero-norm columns)
void correlate_serial(const Dictionary& dict, const cvec& r, rvec& score);
void correlate_parallel(const Dictionary& dict, const cvec& r, rvec& score);

// explicit dictionary, one column per grid triple
cmat materialize_serial(const Dictionary& dict);
cmat materialize_parallel(const Dictionary& dict);

// Normal-equation pieces G = sum A^H A, h = sum A^H y, accumulated per chunk and summed
// in chunk order so the result does not depend on the thread count.
struct NormalEq {
    cmat G;
    cvec h;
};
using ChunkFn = std::function<NormalEq(int)>;
NormalEq reduce_serial(int chunks, int dim, const ChunkFn& fn);
NormalEq reduce_parallel(int chunks, int dim, const ChunkFn& fn);

}  // namespace kernels
}  // namespace wbcal
